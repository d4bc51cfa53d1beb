// Command-line front end: run experiments from a JSON config, verify the
// full oracle/property suite, or inspect a saved model.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "morpho/chain.hpp"
#include "morpho/harness.hpp"
#include "morpho/verify.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("MORPHO_OUT_DIR")) return env;
  return "morpho-out";
}

int cmd_run(const std::string& config_path, const std::string& out_dir_flag,
            long long seed_flag, bool quiet) {
  morpho::harness::ExperimentConfig cfg;
  try {
    cfg = morpho::harness::config_from_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (!out_dir_flag.empty())
    cfg.out_dir = out_dir_flag;
  else if (cfg.out_dir.empty())
    cfg.out_dir = default_out_dir();
  if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
  if (quiet) cfg.quiet = true;

  try {
    const morpho::harness::RunResult result = morpho::harness::run_experiment(cfg);
    if (!cfg.quiet) {
      for (const auto& f : result.files) std::cout << "wrote " << f.string() << "\n";
      std::cout << result.summary_text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_verify(const std::string& out_dir_flag, bool quiet) {
  const std::filesystem::path work =
      out_dir_flag.empty() ? std::filesystem::path(default_out_dir()) / "verify"
                           : std::filesystem::path(out_dir_flag);
  const auto results = morpho::verify::run_all_criteria(work);
  bool all;
  if (quiet) {
    all = true;
    for (const auto& r : results)
      if (!r.pass) all = false;
  } else {
    all = morpho::verify::print_report(results, std::cout);
  }
  return all ? 0 : 2;
}

int cmd_inspect(const std::string& model_path) {
  try {
    const morpho::chain::LayerStack stack = morpho::chain::load_stack(model_path);
    using morpho::harness::format_double;
    std::cout << "layers: " << stack.depth() << "\n";
    for (std::size_t k = 0; k < stack.depth(); ++k) {
      const auto& layer = stack.layers[k];
      std::cout << "[" << k << "] " << morpho::layer_kind_name(layer.kind);
      switch (layer.kind) {
        case morpho::LayerKind::DenseDilation:
        case morpho::LayerKind::DenseErosion:
        case morpho::LayerKind::AntiDilation:
        case morpho::LayerKind::AntiErosion:
        case morpho::LayerKind::Linear: {
          std::cout << " " << layer.W.rows() << "x" << layer.W.cols() << "\n";
          for (std::size_t i = 0; i < layer.W.rows(); ++i) {
            std::cout << "  ";
            for (std::size_t j = 0; j < layer.W.cols(); ++j)
              std::cout << (j ? " " : "") << format_double(layer.W(i, j));
            std::cout << "\n";
          }
          if (layer.kind == morpho::LayerKind::Linear) {
            std::cout << "  bias:";
            for (double b : layer.bias) std::cout << " " << format_double(b);
            std::cout << "\n";
          }
          break;
        }
        case morpho::LayerKind::ConvDilation: {
          std::cout << " taps:";
          for (double w : layer.taps) std::cout << " " << format_double(w);
          std::cout << "\n";
          break;
        }
        case morpho::LayerKind::SquaredErrorLoss: {
          std::cout << " target:";
          for (double t : layer.target) std::cout << " " << format_double(t);
          std::cout << "\n";
          break;
        }
        case morpho::LayerKind::Relu:
          std::cout << "\n";
          break;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-plus layer training tools"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_path;
  long long seed = -1;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress normal output");
  app.add_option("--out-dir", out_dir, "output directory (default MORPHO_OUT_DIR or morpho-out)");

  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->fallthrough();
  run->add_option("config_file", config_path, "path to the config file");
  run->add_option("--config", config_path, "path to the config file (alternative to the positional)");
  run->add_option("--seed", seed, "override the config seed");

  auto* verify = app.add_subcommand("verify", "run the full oracle/property suite");
  verify->fallthrough();

  auto* inspect = app.add_subcommand("inspect", "print the layers of a saved model");
  inspect->fallthrough();
  inspect->add_option("model", model_path, "path to a model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (app.got_subcommand("run")) {
    if (config_path.empty()) {
      std::cerr << "error: run needs a config file (positional or --config)\n";
      return 1;
    }
    return cmd_run(config_path, out_dir, seed, quiet);
  }
  if (app.got_subcommand("verify")) return cmd_verify(out_dir, quiet);
  if (app.got_subcommand("inspect")) return cmd_inspect(model_path);
  return 1;
}
