#include "morpho/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace morpho::harness {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open for writing: " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail("config: top level must be an object");

  ExperimentConfig cfg;
  auto get = [&](const char* field, auto& slot, bool required = false) {
    using T = std::decay_t<decltype(slot)>;
    if (!j.contains(field)) {
      if (required) fail(std::string("config: missing field '") + field + "'");
      return;
    }
    try {
      slot = j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(std::string("config: field '") + field + "' has the wrong type");
    }
  };

  get("task", cfg.task, true);
  get("n", cfg.n);
  get("m", cfg.m);
  get("p", cfg.p);
  get("samples", cfg.samples);
  get("steps", cfg.steps);
  get("seed", cfg.seed);
  get("eta_max", cfg.eta_max);
  get("tie_tol", cfg.tie_tol);
  get("batch", cfg.batch);
  get("batch_size", cfg.batch_size);
  get("classical_rate", cfg.classical_rate);
  get("backtracking", cfg.backtracking);
  get("out_dir", cfg.out_dir);
  get("quiet", cfg.quiet);

  if (j.contains("init")) {
    const auto& init = j.at("init");
    if (!init.is_object() || !init.contains("mode"))
      fail("config: field 'init' must be an object with a 'mode'");
    const std::string mode = init.at("mode").get<std::string>();
    if (mode == "zeros") {
      cfg.init.mode = InitSpec::Mode::Zeros;
    } else if (mode == "uniform") {
      cfg.init.mode = InitSpec::Mode::Uniform;
      if (!init.contains("low") || !init.contains("high"))
        fail("config: init.uniform needs 'low' and 'high'");
      cfg.init.low = init.at("low").get<double>();
      cfg.init.high = init.at("high").get<double>();
      if (!(cfg.init.low <= cfg.init.high)) fail("config: init.low must be <= init.high");
    } else if (mode == "gaussian") {
      cfg.init.mode = InitSpec::Mode::Gaussian;
      if (!init.contains("sigma")) fail("config: init.gaussian needs 'sigma'");
      cfg.init.sigma = init.at("sigma").get<double>();
      if (cfg.init.sigma < 0.0) fail("config: init.sigma must be >= 0");
    } else {
      fail("config: init.mode must be zeros | uniform | gaussian");
    }
  }

  static const char* const tasks[] = {"recover-dilation", "maxplus-factorize",
                                      "layer-position", "init-study", "message-audit"};
  if (std::find(std::begin(tasks), std::end(tasks), cfg.task) == std::end(tasks))
    fail("config: field 'task' must be one of recover-dilation, maxplus-factorize, "
         "layer-position, init-study, message-audit");
  if (cfg.n < 1 || cfg.n > 64) fail("config: field 'n' must be in [1, 64]");
  if (cfg.m < 1 || cfg.m > 64) fail("config: field 'm' must be in [1, 64]");
  if (cfg.p < 1 || cfg.p > 64) fail("config: field 'p' must be in [1, 64]");
  if (cfg.samples < 1) fail("config: field 'samples' must be >= 1");
  if (cfg.steps < 1) fail("config: field 'steps' must be >= 1");
  if (cfg.eta_max <= 0.0) fail("config: field 'eta_max' must be > 0");
  if (cfg.tie_tol < 0.0) fail("config: field 'tie_tol' must be >= 0");
  if (cfg.batch && cfg.batch_size < 2) fail("config: batch mode needs batch_size >= 2");
  if (cfg.classical_rate <= 0.0) fail("config: field 'classical_rate' must be > 0");
  return cfg;
}

ExperimentConfig config_from_file(const std::filesystem::path& path) {
  return config_from_json_text(read_text_file(path));
}

Mat init_matrix(const InitSpec& init, std::size_t rows, std::size_t cols,
                oracle::SeededSampler& sampler) {
  Mat W(rows, cols, 0.0);
  switch (init.mode) {
    case InitSpec::Mode::Zeros:
      break;
    case InitSpec::Mode::Uniform:
      for (auto& v : W.data()) v = sampler.uniform(init.low, init.high);
      break;
    case InitSpec::Mode::Gaussian:
      for (auto& v : W.data()) v = init.sigma * sampler.gauss();
      break;
  }
  return W;
}

DeadWeightTracker::DeadWeightTracker(const chain::LayerStack& stack) {
  for (const auto& layer : stack.layers) {
    kinds_.push_back(layer.kind);
    switch (layer.kind) {
      case LayerKind::DenseDilation:
      case LayerKind::DenseErosion:
      case LayerKind::AntiDilation:
      case LayerKind::AntiErosion:
        ever_.emplace_back(layer.W.rows() * layer.W.cols(), false);
        cols_.push_back(layer.W.cols());
        break;
      case LayerKind::ConvDilation:
        ever_.emplace_back(layer.taps.size(), false);
        cols_.push_back(layer.taps.size());
        break;
      default:
        ever_.emplace_back();
        cols_.push_back(0);
        break;
    }
  }
}

void DeadWeightTracker::observe(const chain::BackwardTrace& trace) {
  for (std::size_t k = 0; k < trace.per_layer.size() && k < ever_.size(); ++k) {
    if (ever_[k].empty()) continue;
    const SupportSets& J = trace.per_layer[k].supports;
    switch (kinds_[k]) {
      case LayerKind::DenseDilation:
      case LayerKind::AntiDilation:
        for (std::size_t i = 0; i < J.size(); ++i)
          for (std::size_t j : J.sets[i]) ever_[k][i * cols_[k] + j] = true;
        break;
      case LayerKind::DenseErosion:
      case LayerKind::AntiErosion:
        // supports index input slots per output column; entry (k_in, j).
        for (std::size_t j = 0; j < J.size(); ++j)
          for (std::size_t kin : J.sets[j]) ever_[k][kin * cols_[k] + j] = true;
        break;
      case LayerKind::ConvDilation:
        for (std::size_t i = 0; i < J.size(); ++i)
          for (std::size_t j : J.sets[i]) ever_[k][j] = true;
        break;
      default:
        break;
    }
  }
}

std::size_t DeadWeightTracker::dead_count() const {
  std::size_t dead = 0;
  for (const auto& flags : ever_)
    for (bool b : flags)
      if (!b) ++dead;
  return dead;
}

std::size_t DeadWeightTracker::total_tracked() const {
  std::size_t total = 0;
  for (const auto& flags : ever_) total += flags.size();
  return total;
}

bool DeadWeightTracker::ever_supported(std::size_t layer, std::size_t row,
                                       std::size_t col) const {
  return ever_[layer][row * cols_[layer] + col];
}

double mean_pool_loss(chain::LayerStack& stack, const std::vector<Vec>& xs,
                      const std::vector<Vec>& ys) {
  double total = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    chain::set_loss_target(stack, ys[s]);
    total += chain::forward(stack, xs[s]).loss;
  }
  return total / static_cast<double>(xs.size());
}

namespace {

struct StepRow {
  std::size_t step = 0;
  std::size_t sample = 0;
  chain::StepReport report;
  std::size_t dead = 0;
};

struct TrainOutcome {
  std::vector<StepRow> rows;
  double initial_loss = 0.0;  // mean pool loss before training
  double final_loss = 0.0;    // mean pool loss after training
  std::size_t nonincreasing_steps = 0;
};

chain::EngineConfig engine_config(const ExperimentConfig& cfg) {
  chain::EngineConfig engine;
  engine.eta_max = cfg.eta_max;
  engine.tie_tol = cfg.tie_tol;
  engine.classical_rate = cfg.classical_rate;
  engine.backtracking = cfg.backtracking;
  return engine;
}

TrainOutcome train_stack(chain::LayerStack& stack, const std::vector<Vec>& xs,
                         const std::vector<Vec>& ys, std::size_t steps,
                         const chain::EngineConfig& engine, DeadWeightTracker* tracker,
                         std::size_t batch_size = 1) {
  TrainOutcome out;
  out.initial_loss = mean_pool_loss(stack, xs, ys);
  out.rows.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    std::size_t s = (step * batch_size) % xs.size();
    chain::set_loss_target(stack, ys[s]);
    chain::ForwardTrace fwd = chain::forward(stack, xs[s]);
    chain::BackwardTrace trace = chain::backward(stack, fwd, engine);
    if (tracker) tracker->observe(trace);
    if (batch_size > 1) {
      // Mini-batch mode: average the per-sample directions, keep the
      // smallest per-layer step across the batch.
      std::vector<chain::BackwardTrace> traces;
      traces.push_back(std::move(trace));
      for (std::size_t i = 1; i < batch_size; ++i) {
        const std::size_t si = (s + i) % xs.size();
        chain::set_loss_target(stack, ys[si]);
        const chain::ForwardTrace fwd_i = chain::forward(stack, xs[si]);
        traces.push_back(chain::backward(stack, fwd_i, engine));
        if (tracker) tracker->observe(traces.back());
      }
      trace = chain::combine_traces(traces);
      chain::set_loss_target(stack, ys[s]);
      fwd = chain::forward(stack, xs[s]);
    }
    const chain::StepReport report = chain::apply_updates(stack, trace, fwd, engine);
    StepRow row;
    row.step = step;
    row.sample = s;
    row.report = report;
    row.dead = tracker ? tracker->dead_count() : 0;
    if (report.loss_after <= report.loss_before) ++out.nonincreasing_steps;
    out.rows.push_back(std::move(row));
  }
  out.final_loss = mean_pool_loss(stack, xs, ys);
  return out;
}

std::string train_csv_header(std::size_t depth, const std::string& prefix) {
  std::string h = prefix + "step,sample,loss_before,loss_after,backtracks,dead_weights";
  for (std::size_t k = 1; k <= depth; ++k)
    h += ",gain_" + std::to_string(k) + ",step_" + std::to_string(k) + ",upd_viol_" +
         std::to_string(k) + ",tr_viol_" + std::to_string(k);
  for (std::size_t k = 1; k <= depth + 1; ++k) h += ",vu_" + std::to_string(k);
  return h + "\n";
}

void append_train_row(std::string& out, const StepRow& row, const std::string& prefix) {
  const chain::StepReport& r = row.report;
  out += prefix;
  out += std::to_string(row.step);
  out += ',';
  out += std::to_string(row.sample);
  out += ',';
  out += format_double(r.loss_before);
  out += ',';
  out += format_double(r.loss_after);
  out += ',';
  out += std::to_string(r.backtracks);
  out += ',';
  out += std::to_string(row.dead);
  for (std::size_t k = 0; k < r.gains.size(); ++k) {
    out += ',';
    out += format_double(r.gains[k]);
    out += ',';
    out += format_double(r.steps[k]);
    out += ',';
    out += r.update_misaligned[k] ? '1' : '0';
    out += ',';
    out += r.transport_violated[k] ? '1' : '0';
  }
  for (double v : r.vu) {
    out += ',';
    out += format_double(v);
  }
  out += '\n';
}

std::filesystem::path ensure_out_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.out_dir.empty() ? "morpho-out" : cfg.out_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// recover-dilation: fit a single dense dilation to targets from a hidden one.
// ---------------------------------------------------------------------------
RunResult run_recover_dilation(const ExperimentConfig& cfg) {
  oracle::SeededSampler sampler(cfg.seed);
  Mat hidden(cfg.m, cfg.n);
  for (auto& v : hidden.data()) v = sampler.uniform(-1.0, 1.0);
  std::vector<Vec> xs(cfg.samples), ys(cfg.samples);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    Vec x(cfg.n);
    for (auto& v : x) v = sampler.uniform01();
    ys[s] = dilation_forward(hidden, x);
    xs[s] = std::move(x);
  }

  oracle::SeededSampler init_sampler = sampler.child(1);
  chain::LayerStack stack;
  stack.layers.push_back(chain::dense_dilation(init_matrix(cfg.init, cfg.m, cfg.n, init_sampler)));
  stack.layers.push_back(chain::squared_error_loss(Vec(cfg.m, 0.0)));

  DeadWeightTracker tracker(stack);
  TrainOutcome outcome = train_stack(stack, xs, ys, cfg.steps, engine_config(cfg), &tracker,
                                     cfg.batch ? cfg.batch_size : 1);

  // Sup-norm error against the hidden weights, restricted to entries that
  // entered a support set at least once.
  double sup_err = 0.0;
  const Mat& W = stack.layers.front().W;
  for (std::size_t i = 0; i < cfg.m; ++i)
    for (std::size_t j = 0; j < cfg.n; ++j)
      if (tracker.ever_supported(0, i, j))
        sup_err = std::max(sup_err, std::fabs(W(i, j) - hidden(i, j)));

  const auto dir = ensure_out_dir(cfg);
  std::string csv = train_csv_header(stack.depth(), "");
  for (const auto& row : outcome.rows) append_train_row(csv, row, "");
  const auto metrics_path = dir / "recover-dilation_metrics.csv";
  write_text_file(metrics_path, csv);

  const auto model_path = dir / "recover-dilation_model.json";
  chain::save_stack(stack, model_path);

  nlohmann::json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["initial_loss"] = outcome.initial_loss;
  summary["final_loss"] = outcome.final_loss;
  summary["loss_ratio"] =
      outcome.initial_loss > 0.0 ? outcome.final_loss / outcome.initial_loss : 0.0;
  summary["nonincreasing_fraction"] =
      static_cast<double>(outcome.nonincreasing_steps) / static_cast<double>(cfg.steps);
  summary["dead_weights"] = tracker.dead_count();
  summary["weight_sup_error_supported"] = sup_err;
  summary["steps"] = cfg.steps;
  const auto summary_path = dir / "recover-dilation_summary.json";
  const std::string summary_text = summary.dump(2) + "\n";
  write_text_file(summary_path, summary_text);

  return RunResult{{metrics_path, model_path, summary_path}, outcome.initial_loss,
                   outcome.final_loss, summary_text};
}

// ---------------------------------------------------------------------------
// maxplus-factorize: fit dilation(A) o dilation(B) to targets from a hidden
// single dilation C (m x n), through an m x p x n factorization.
// ---------------------------------------------------------------------------
RunResult run_maxplus_factorize(const ExperimentConfig& cfg) {
  oracle::SeededSampler sampler(cfg.seed);
  Mat hidden(cfg.m, cfg.n);
  for (auto& v : hidden.data()) v = sampler.uniform(-1.0, 1.0);
  std::vector<Vec> xs(cfg.samples), ys(cfg.samples);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    Vec x(cfg.n);
    for (auto& v : x) v = sampler.uniform01();
    ys[s] = dilation_forward(hidden, x);
    xs[s] = std::move(x);
  }

  oracle::SeededSampler init_sampler = sampler.child(1);
  chain::LayerStack stack;
  stack.layers.push_back(chain::dense_dilation(init_matrix(cfg.init, cfg.p, cfg.n, init_sampler)));
  stack.layers.push_back(chain::dense_dilation(init_matrix(cfg.init, cfg.m, cfg.p, init_sampler)));
  stack.layers.push_back(chain::squared_error_loss(Vec(cfg.m, 0.0)));

  DeadWeightTracker tracker(stack);
  TrainOutcome outcome = train_stack(stack, xs, ys, cfg.steps, engine_config(cfg), &tracker,
                                     cfg.batch ? cfg.batch_size : 1);

  std::size_t viol11 = 0;
  for (const auto& row : outcome.rows)
    viol11 += chain::property_monitor(row.report).transport_violations;

  const auto dir = ensure_out_dir(cfg);
  std::string csv = train_csv_header(stack.depth(), "");
  for (const auto& row : outcome.rows) append_train_row(csv, row, "");
  const auto metrics_path = dir / "maxplus-factorize_metrics.csv";
  write_text_file(metrics_path, csv);
  const auto model_path = dir / "maxplus-factorize_model.json";
  chain::save_stack(stack, model_path);

  nlohmann::json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["initial_loss"] = outcome.initial_loss;
  summary["final_loss"] = outcome.final_loss;
  summary["transport_violation_rate"] =
      static_cast<double>(viol11) / static_cast<double>(cfg.steps * stack.depth());
  summary["nonincreasing_fraction"] =
      static_cast<double>(outcome.nonincreasing_steps) / static_cast<double>(cfg.steps);
  summary["dead_weights"] = tracker.dead_count();
  const auto summary_path = dir / "maxplus-factorize_summary.json";
  const std::string summary_text = summary.dump(2) + "\n";
  write_text_file(summary_path, summary_text);

  return RunResult{{metrics_path, model_path, summary_path}, outcome.initial_loss,
                   outcome.final_loss, summary_text};
}

// ---------------------------------------------------------------------------
// layer-position: the same data fitted by [dilation, linear, loss] and by
// [linear, dilation, loss], paired over 10 seeds.
// ---------------------------------------------------------------------------
RunResult run_layer_position(const ExperimentConfig& cfg) {
  constexpr std::size_t kRepeats = 10;
  const auto dir = ensure_out_dir(cfg);

  std::string csv = train_csv_header(3, "variant,rep,");
  std::vector<double> finals_early, finals_late;
  std::vector<std::size_t> morpho_viol_early, morpho_viol_late;

  for (std::size_t rep = 0; rep < kRepeats; ++rep) {
    oracle::SeededSampler sampler(cfg.seed + rep);
    // Teacher: dilation then affine map.
    Mat d_star(cfg.n, cfg.n);
    for (auto& v : d_star.data()) v = sampler.uniform(-1.0, 1.0);
    Mat l_star(cfg.m, cfg.n);
    for (auto& v : l_star.data()) v = sampler.uniform(-1.0, 1.0);
    Vec b_star(cfg.m);
    for (auto& v : b_star) v = sampler.uniform(-0.5, 0.5);
    std::vector<Vec> xs(cfg.samples), ys(cfg.samples);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      Vec x(cfg.n);
      for (auto& v : x) v = sampler.uniform01();
      ys[s] = linear_forward(l_star, b_star, dilation_forward(d_star, x));
      xs[s] = std::move(x);
    }

    const double lin_sigma = 1.0 / std::sqrt(static_cast<double>(cfg.n));
    for (int variant = 0; variant < 2; ++variant) {
      oracle::SeededSampler init_sampler = sampler.child(100 + variant);
      chain::LayerStack stack;
      if (variant == 0) {
        stack.layers.push_back(
            chain::dense_dilation(init_matrix(cfg.init, cfg.n, cfg.n, init_sampler)));
        Mat lw(cfg.m, cfg.n);
        for (auto& v : lw.data()) v = lin_sigma * init_sampler.gauss();
        stack.layers.push_back(chain::linear(std::move(lw), Vec(cfg.m, 0.0)));
      } else {
        Mat lw(cfg.n, cfg.n);
        for (auto& v : lw.data()) v = lin_sigma * init_sampler.gauss();
        stack.layers.push_back(chain::linear(std::move(lw), Vec(cfg.n, 0.0)));
        stack.layers.push_back(
            chain::dense_dilation(init_matrix(cfg.init, cfg.m, cfg.n, init_sampler)));
      }
      stack.layers.push_back(chain::squared_error_loss(Vec(cfg.m, 0.0)));

      DeadWeightTracker tracker(stack);
      TrainOutcome outcome =
          train_stack(stack, xs, ys, cfg.steps, engine_config(cfg), &tracker);

      const std::string prefix =
          std::string(variant == 0 ? "early" : "late") + "," + std::to_string(rep) + ",";
      for (const auto& row : outcome.rows) append_train_row(csv, row, prefix);

      const std::size_t morpho_layer = variant == 0 ? 0 : 1;
      std::size_t viol = 0;
      for (const auto& row : outcome.rows)
        if (row.report.update_misaligned[morpho_layer] || row.report.transport_violated[morpho_layer]) ++viol;
      if (variant == 0) {
        finals_early.push_back(outcome.final_loss);
        morpho_viol_early.push_back(viol);
      } else {
        finals_late.push_back(outcome.final_loss);
        morpho_viol_late.push_back(viol);
      }
    }
  }

  const auto metrics_path = dir / "layer-position_metrics.csv";
  write_text_file(metrics_path, csv);

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  nlohmann::json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["repeats"] = kRepeats;
  summary["median_final_loss_early"] = median(finals_early);
  summary["median_final_loss_late"] = median(finals_late);
  summary["morpho_layer_violations_early"] = morpho_viol_early;
  summary["morpho_layer_violations_late"] = morpho_viol_late;
  const auto summary_path = dir / "layer-position_summary.json";
  const std::string summary_text = summary.dump(2) + "\n";
  write_text_file(summary_path, summary_text);

  return RunResult{{metrics_path, summary_path}, median(finals_early), median(finals_late),
                   summary_text};
}

// ---------------------------------------------------------------------------
// init-study: dead-weight counts after training, zero init vs uniform [-2,-1]
// init, paired over 20 seeds.
// ---------------------------------------------------------------------------
RunResult run_init_study(const ExperimentConfig& cfg) {
  constexpr std::size_t kSeeds = 20;
  const auto dir = ensure_out_dir(cfg);

  std::string csv = "seed,dead_zero_init,dead_negative_init,negative_exceeds\n";
  std::size_t wins = 0;
  for (std::size_t r = 0; r < kSeeds; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    std::size_t dead[2] = {0, 0};
    for (int variant = 0; variant < 2; ++variant) {
      oracle::SeededSampler sampler(seed);
      Mat hidden(cfg.m, cfg.n);
      for (auto& v : hidden.data()) v = sampler.uniform(-1.0, 1.0);
      std::vector<Vec> xs(cfg.samples), ys(cfg.samples);
      for (std::size_t s = 0; s < cfg.samples; ++s) {
        Vec x(cfg.n);
        for (auto& v : x) v = sampler.uniform01();
        ys[s] = dilation_forward(hidden, x);
        xs[s] = std::move(x);
      }
      InitSpec init;
      if (variant == 1) {
        init.mode = InitSpec::Mode::Uniform;
        init.low = -2.0;
        init.high = -1.0;
      }
      oracle::SeededSampler init_sampler = sampler.child(1);
      chain::LayerStack stack;
      stack.layers.push_back(
          chain::dense_dilation(init_matrix(init, cfg.m, cfg.n, init_sampler)));
      stack.layers.push_back(chain::squared_error_loss(Vec(cfg.m, 0.0)));
      DeadWeightTracker tracker(stack);
      train_stack(stack, xs, ys, cfg.steps, engine_config(cfg), &tracker);
      dead[variant] = tracker.dead_count();
    }
    const bool win = dead[1] > dead[0];
    if (win) ++wins;
    csv += std::to_string(seed) + "," + std::to_string(dead[0]) + "," +
           std::to_string(dead[1]) + "," + (win ? "1" : "0") + "\n";
  }

  const auto metrics_path = dir / "init-study_metrics.csv";
  write_text_file(metrics_path, csv);

  nlohmann::json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["seeds"] = kSeeds;
  summary["negative_init_exceeds_fraction"] =
      static_cast<double>(wins) / static_cast<double>(kSeeds);
  const auto summary_path = dir / "init-study_summary.json";
  const std::string summary_text = summary.dump(2) + "\n";
  write_text_file(summary_path, summary_text);

  return RunResult{{metrics_path, summary_path}, 0.0, 0.0, summary_text};
}

// ---------------------------------------------------------------------------
// message-audit: message-condition checks over tie-free, tie-rich and
// degenerate populations.
// ---------------------------------------------------------------------------
RunResult run_message_audit(const ExperimentConfig& cfg) {
  constexpr std::size_t kVSamples = 10000;
  const auto dir = ensure_out_dir(cfg);
  oracle::SeededSampler sampler(cfg.seed);

  std::string csv = "population,instance,degenerate,forward_align,halfspace_violations,samples\n";
  std::size_t notie_forward_align_fail = 0, notie_halfspace = 0;
  std::size_t tie_forward_align_fail = 0, tie_halfspace = 0, tie_instances_with_viol = 0;
  std::size_t degenerate_flagged = 0;

  for (int pop = 0; pop < 3; ++pop) {
    const char* name = pop == 0 ? "notie" : pop == 1 ? "ties" : "degenerate";
    for (std::size_t inst = 0; inst < cfg.samples; ++inst) {
      oracle::SeededSampler child = sampler.child(pop * 100000 + inst);
      Mat W;
      Vec x;
      if (pop == 0) {
        // reject instances with any tie
        for (;;) {
          auto cand = oracle::lattice_dilation_instance(child, cfg.m, cfg.n, false);
          if (support_sets_wrt_params(cand.W, cand.x, 0.0).all_singleton()) {
            W = std::move(cand.W);
            x = std::move(cand.x);
            break;
          }
        }
      } else {
        auto cand = oracle::lattice_dilation_instance(child, cfg.m, cfg.n, false);
        W = std::move(cand.W);
        x = std::move(cand.x);
        // force one tie block of multiplicity 2..4 per row
        const Vec phi = dilation_row_maxima(W, x);
        for (std::size_t i = 0; i < cfg.m; ++i) {
          const std::size_t mult = 2 + child.index(3);
          for (std::size_t t = 0; t + 1 < mult && cfg.n > 1; ++t)
            W(i, child.index(cfg.n)) = phi[i] - x[child.index(cfg.n)];
        }
      }
      const SupportSets J = support_sets_wrt_params(W, x, 0.0);
      const TargetMessage u = pop == 2 ? TargetMessage::from_raw(Vec(cfg.m, 0.0))
                                       : TargetMessage::from_raw(child.unit_vector(cfg.m));
      const VecDirection h = message_candidate(J, u);
      oracle::SeededSampler audit_sampler = child.child(7);
      const MessageAudit audit = message_quality_audit(J, u, h, audit_sampler, kVSamples);

      csv += std::string(name) + "," + std::to_string(inst) + "," +
             (audit.degenerate ? "1" : "0") + "," + (audit.forward_align ? "1" : "0") + "," +
             std::to_string(audit.halfspace_violations) + "," + std::to_string(audit.samples) +
             "\n";
      if (pop == 0) {
        if (!audit.forward_align) ++notie_forward_align_fail;
        notie_halfspace += audit.halfspace_violations;
      } else if (pop == 1) {
        if (!audit.forward_align) ++tie_forward_align_fail;
        tie_halfspace += audit.halfspace_violations;
        if (audit.halfspace_violations > 0) ++tie_instances_with_viol;
      } else if (audit.degenerate) {
        ++degenerate_flagged;
      }
    }
  }

  const auto metrics_path = dir / "message-audit_metrics.csv";
  write_text_file(metrics_path, csv);

  nlohmann::json summary;
  summary["task"] = cfg.task;
  summary["seed"] = cfg.seed;
  summary["instances_per_population"] = cfg.samples;
  summary["v_samples_per_instance"] = kVSamples;
  summary["notie_forward_align_failures"] = notie_forward_align_fail;
  summary["notie_halfspace_violations"] = notie_halfspace;
  summary["tie_forward_align_failures"] = tie_forward_align_fail;
  summary["tie_halfspace_violations"] = tie_halfspace;
  summary["tie_instances_with_violations"] = tie_instances_with_viol;
  summary["degenerate_flagged_fraction"] =
      static_cast<double>(degenerate_flagged) / static_cast<double>(cfg.samples);
  const auto summary_path = dir / "message-audit_summary.json";
  const std::string summary_text = summary.dump(2) + "\n";
  write_text_file(summary_path, summary_text);

  return RunResult{{metrics_path, summary_path}, 0.0, 0.0, summary_text};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.task == "recover-dilation") return run_recover_dilation(cfg);
  if (cfg.task == "maxplus-factorize") return run_maxplus_factorize(cfg);
  if (cfg.task == "layer-position") return run_layer_position(cfg);
  if (cfg.task == "init-study") return run_init_study(cfg);
  if (cfg.task == "message-audit") return run_message_audit(cfg);
  fail("run_experiment: unknown task '" + cfg.task + "'");
}

}  // namespace morpho::harness
