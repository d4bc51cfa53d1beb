// Experiment harness: JSON experiment configs, synthetic-data training tasks,
// CSV metrics and JSON summaries, model persistence, and a dead-weight
// tracker for morphological parameters that never reach a support set.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "morpho/chain.hpp"
#include "morpho/oracle.hpp"

namespace morpho::harness {

struct InitSpec {
  enum class Mode { Zeros, Uniform, Gaussian };
  Mode mode = Mode::Zeros;
  double low = 0.0;
  double high = 0.0;
  double sigma = 1.0;
};

struct ExperimentConfig {
  std::string task;  // recover-dilation | maxplus-factorize | layer-position |
                     // init-study | message-audit
  std::size_t n = 8;
  std::size_t m = 8;
  std::size_t p = 4;
  std::size_t samples = 500;
  std::size_t steps = 2000;
  std::uint64_t seed = 1;
  double eta_max = 1.0;
  double tie_tol = 0.0;
  InitSpec init;
  bool batch = false;
  std::size_t batch_size = 1;
  double classical_rate = 0.1;
  bool backtracking = true;
  std::string out_dir;  // resolved against --out-dir / MORPHO_OUT_DIR by the CLI
  bool quiet = false;
};

// Parses and validates a config document; throws std::invalid_argument with
// a field (or parser line/byte) diagnostic on malformed input.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_file(const std::filesystem::path& path);

// Shortest round-trip decimal formatting.
std::string format_double(double value);

struct RunResult {
  std::vector<std::filesystem::path> files;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::string summary_text;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// Marks morphological parameters that entered a support set at least once;
// a parameter never marked is "dead": no candidate update can move it.
class DeadWeightTracker {
 public:
  explicit DeadWeightTracker(const chain::LayerStack& stack);
  void observe(const chain::BackwardTrace& trace);
  std::size_t dead_count() const;
  std::size_t total_tracked() const;
  bool ever_supported(std::size_t layer, std::size_t row, std::size_t col) const;

 private:
  std::vector<std::vector<bool>> ever_;
  std::vector<std::size_t> cols_;
  std::vector<LayerKind> kinds_;
};

// Mean loss of the stack over a sample pool (targets swapped in per sample).
double mean_pool_loss(chain::LayerStack& stack, const std::vector<Vec>& xs,
                      const std::vector<Vec>& ys);

Mat init_matrix(const InitSpec& init, std::size_t rows, std::size_t cols,
                oracle::SeededSampler& sampler);

}  // namespace morpho::harness
