#include "morpho/chain.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace morpho::chain {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Vec negated(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}
}  // namespace

Layer dense_dilation(Mat W) {
  require_finite(W, "dense_dilation");
  return Layer{LayerKind::DenseDilation, std::move(W), {}, {}, {}};
}

Layer dense_erosion(Mat W) {
  require_finite(W, "dense_erosion");
  return Layer{LayerKind::DenseErosion, std::move(W), {}, {}, {}};
}

Layer anti_dilation(Mat W) {
  require_finite(W, "anti_dilation");
  return Layer{LayerKind::AntiDilation, std::move(W), {}, {}, {}};
}

Layer anti_erosion(Mat W) {
  require_finite(W, "anti_erosion");
  return Layer{LayerKind::AntiErosion, std::move(W), {}, {}, {}};
}

Layer conv_dilation(Vec taps) {
  require_finite(taps, "conv_dilation");
  if (taps.empty()) fail("conv_dilation: empty taps");
  return Layer{LayerKind::ConvDilation, {}, {}, std::move(taps), {}};
}

Layer linear(Mat W, Vec bias) {
  require_finite(W, "linear");
  require_finite(bias, "linear");
  if (W.rows() != bias.size()) fail("linear: W.rows != bias.dim");
  return Layer{LayerKind::Linear, std::move(W), std::move(bias), {}, {}};
}

Layer relu() { return Layer{LayerKind::Relu, {}, {}, {}, {}}; }

Layer squared_error_loss(Vec target) {
  require_finite(target, "squared_error_loss");
  if (target.empty()) fail("squared_error_loss: empty target");
  return Layer{LayerKind::SquaredErrorLoss, {}, {}, {}, std::move(target)};
}

bool layer_has_params(const Layer& layer) {
  switch (layer.kind) {
    case LayerKind::DenseDilation:
    case LayerKind::DenseErosion:
    case LayerKind::AntiDilation:
    case LayerKind::AntiErosion:
    case LayerKind::ConvDilation:
    case LayerKind::Linear:
      return true;
    default:
      return false;
  }
}

bool layer_is_morphological(const Layer& layer) {
  switch (layer.kind) {
    case LayerKind::DenseDilation:
    case LayerKind::DenseErosion:
    case LayerKind::AntiDilation:
    case LayerKind::AntiErosion:
    case LayerKind::ConvDilation:
      return true;
    default:
      return false;
  }
}

std::size_t layer_output_dim(const Layer& layer, std::size_t in_dim) {
  switch (layer.kind) {
    case LayerKind::DenseDilation:
    case LayerKind::AntiDilation:
      if (layer.W.cols() != in_dim) fail("layer_output_dim: dilation input dim mismatch");
      return layer.W.rows();
    case LayerKind::DenseErosion:
    case LayerKind::AntiErosion:
      if (layer.W.rows() != in_dim) fail("layer_output_dim: erosion input dim mismatch");
      return layer.W.cols();
    case LayerKind::ConvDilation:
      if (in_dim < layer.taps.size()) fail("layer_output_dim: signal shorter than taps");
      return in_dim - layer.taps.size() + 1;
    case LayerKind::Linear:
      if (layer.W.cols() != in_dim) fail("layer_output_dim: linear input dim mismatch");
      return layer.W.rows();
    case LayerKind::Relu:
      return in_dim;
    case LayerKind::SquaredErrorLoss:
      if (layer.target.size() != in_dim) fail("layer_output_dim: loss target dim mismatch");
      return 1;
  }
  fail("layer_output_dim: unknown kind");
}

Vec layer_forward(const Layer& layer, const Vec& x) {
  switch (layer.kind) {
    case LayerKind::DenseDilation:
      return dilation_forward(layer.W, x);
    case LayerKind::DenseErosion:
      return erosion_forward(layer.W, x);
    case LayerKind::AntiDilation:
    case LayerKind::AntiErosion:
      return anti_forward(layer.kind, layer.W, x);
    case LayerKind::ConvDilation:
      return conv_dilation_forward(layer.taps, windows_from_signal(x, layer.taps.size()));
    case LayerKind::Linear:
      return linear_forward(layer.W, layer.bias, x);
    case LayerKind::Relu:
      return relu_forward(x);
    case LayerKind::SquaredErrorLoss:
      return Vec{morpho::squared_error_loss(x, layer.target)};
  }
  fail("layer_forward: unknown kind");
}

void validate_stack(const LayerStack& stack, std::size_t input_dim) {
  if (stack.layers.empty()) fail("validate_stack: empty stack");
  std::size_t dim = input_dim;
  for (const Layer& layer : stack.layers) dim = layer_output_dim(layer, dim);
  if (dim != 1) fail("validate_stack: stack must end in a scalar");
  if (stack.layers.back().kind != LayerKind::SquaredErrorLoss)
    fail("validate_stack: last layer must be the loss");
}

void set_loss_target(LayerStack& stack, const Vec& target) {
  if (stack.layers.empty() || stack.layers.back().kind != LayerKind::SquaredErrorLoss)
    fail("set_loss_target: stack has no trailing loss layer");
  require_finite(target, "set_loss_target");
  if (stack.layers.back().target.size() != target.size())
    fail("set_loss_target: target dim mismatch");
  stack.layers.back().target = target;
}

ForwardTrace forward(const LayerStack& stack, const Vec& x) {
  validate_stack(stack, x.size());
  ForwardTrace trace;
  trace.inputs.reserve(stack.depth());
  Vec cur = x;
  for (const Layer& layer : stack.layers) {
    trace.inputs.push_back(cur);
    cur = layer_forward(layer, cur);
  }
  trace.loss = cur.at(0);
  return trace;
}

namespace {

TargetMessage negated_message(const VecDirection& d) {
  TargetMessage m;
  m.u = negated(d.entries);
  m.degenerate = d.degenerate;
  return m;
}

TargetMessage message_from_direction(const VecDirection& d) {
  TargetMessage m;
  m.u = d.entries;
  m.degenerate = d.degenerate;
  return m;
}

// Backward step for one layer: fills delta/gain/step and the outgoing message.
void backward_layer(const Layer& layer, const Vec& x, const TargetMessage& u,
                    const EngineConfig& config, LayerTrace& out, TargetMessage& emitted) {
  switch (layer.kind) {
    case LayerKind::SquaredErrorLoss: {
      // f'(x; h) = <2(x - t), h>; adjoint of the scalar message.
      Vec raw(x.size());
      const double s = u.degenerate ? 0.0 : u.u.at(0);
      for (std::size_t i = 0; i < x.size(); ++i)
        raw[i] = 2.0 * (x[i] - layer.target[i]) * s;
      emitted = TargetMessage::from_raw(raw);
      break;
    }
    case LayerKind::Relu: {
      Vec raw(x.size(), 0.0);
      if (!u.degenerate)
        for (std::size_t i = 0; i < x.size(); ++i) raw[i] = x[i] >= 0.0 ? u.u[i] : 0.0;
      emitted = TargetMessage::from_raw(raw);
      break;
    }
    case LayerKind::Linear: {
      out.has_param = true;
      if (u.degenerate) {
        out.delta.degenerate = true;
        emitted = TargetMessage::from_raw(Vec(layer.W.cols(), 0.0));
        break;
      }
      Mat dW(layer.W.rows(), layer.W.cols());
      for (std::size_t i = 0; i < layer.W.rows(); ++i)
        for (std::size_t j = 0; j < layer.W.cols(); ++j) dW(i, j) = u.u[i] * x[j];
      Vec dbias = u.u;
      double n2 = 0.0;
      for (double v : dW.data()) n2 += v * v;
      for (double v : dbias) n2 += v * v;
      const double n = std::sqrt(n2);
      if (n == 0.0) {
        out.delta.degenerate = true;
      } else {
        for (auto& v : dW.data()) v /= n;
        for (auto& v : dbias) v /= n;
        out.delta.dW = std::move(dW);
        out.delta.dbias = std::move(dbias);
        out.delta.norm = 1.0;
        Vec response = linear_forward(out.delta.dW, out.delta.dbias, x);
        out.gain = dot(response, u.u);
        out.step = config.classical_rate;
      }
      Vec raw(layer.W.cols(), 0.0);
      for (std::size_t j = 0; j < layer.W.cols(); ++j)
        for (std::size_t i = 0; i < layer.W.rows(); ++i) raw[j] += layer.W(i, j) * u.u[i];
      emitted = TargetMessage::from_raw(raw);
      break;
    }
    case LayerKind::DenseDilation:
    case LayerKind::AntiDilation: {
      out.has_param = true;
      const Vec point = layer.kind == LayerKind::DenseDilation ? x : negated(x);
      out.supports = support_sets_wrt_params(layer.W, point, config.tie_tol);
      UpdateProposal prop = candidate_delta_w(out.supports, u);
      out.delta.dW = std::move(prop.direction.entries);
      out.delta.norm = prop.direction.norm;
      out.delta.degenerate = prop.direction.degenerate;
      out.gain = prop.predicted_gain;
      if (!out.delta.degenerate) {
        MatDirection dir{out.delta.dW, out.delta.norm, false};
        out.step = learning_rate_param(layer.W, point, out.supports, u, dir, config.eta_max);
      }
      const VecDirection msg = message_candidate(out.supports, u, config.degenerate_policy);
      emitted = layer.kind == LayerKind::DenseDilation ? message_from_direction(msg)
                                                       : negated_message(msg);
      break;
    }
    case LayerKind::DenseErosion:
    case LayerKind::AntiErosion: {
      out.has_param = true;
      const Vec point = layer.kind == LayerKind::DenseErosion ? x : negated(x);
      out.supports = erosion_support_sets(layer.W, point, config.tie_tol);
      UpdateProposal prop = erosion_candidate_delta_w(out.supports, u);
      out.delta.dW = std::move(prop.direction.entries);
      out.delta.norm = prop.direction.norm;
      out.delta.degenerate = prop.direction.degenerate;
      out.gain = prop.predicted_gain;
      if (!out.delta.degenerate) {
        MatDirection dir{out.delta.dW, out.delta.norm, false};
        out.step =
            erosion_learning_rate_param(layer.W, point, out.supports, u, dir, config.eta_max);
      }
      const VecDirection msg = erosion_message_candidate(out.supports, u, config.degenerate_policy);
      emitted = layer.kind == LayerKind::DenseErosion ? message_from_direction(msg)
                                                      : negated_message(msg);
      break;
    }
    case LayerKind::ConvDilation: {
      out.has_param = true;
      const Mat blocks = windows_from_signal(x, layer.taps.size());
      out.supports = conv_support_sets(layer.taps, blocks, config.tie_tol);
      const VecDirection dtaps = conv_candidate_delta_w(out.supports, u);
      out.delta.dtaps = dtaps.entries;
      out.delta.norm = dtaps.norm;
      out.delta.degenerate = dtaps.degenerate;
      if (!dtaps.degenerate) {
        out.gain = dot(conv_bderiv_wrt_taps(out.supports, dtaps.entries), u.u);
        const AffineRange range =
            conv_affine_range_wrt_taps(layer.taps, blocks, dtaps.entries, out.supports);
        out.step = std::min(range.epsilon, config.eta_max);
      }
      // Message over the signal: window i, tap j reaches signal slot i + j.
      Vec raw(x.size(), 0.0);
      if (!u.degenerate)
        for (std::size_t i = 0; i < out.supports.size(); ++i)
          for (std::size_t j : out.supports.sets[i]) raw[i + j] += u.u[i];
      emitted = TargetMessage::from_raw(raw);
      break;
    }
  }
}

}  // namespace

BackwardTrace backward(const LayerStack& stack, const ForwardTrace& fwd,
                       const EngineConfig& config) {
  if (fwd.inputs.size() != stack.depth()) fail("backward: trace does not match stack");
  const std::size_t depth = stack.depth();
  BackwardTrace trace;
  trace.messages.resize(depth + 1);
  trace.per_layer.resize(depth);
  trace.messages[depth] = TargetMessage::from_raw(Vec{-1.0});
  for (std::size_t k = depth; k-- > 0;) {
    LayerTrace& lt = trace.per_layer[k];
    lt.incoming = trace.messages[k + 1];
    backward_layer(stack.layers[k], fwd.inputs[k], lt.incoming, config, lt,
                   trace.messages[k]);
  }
  return trace;
}

BackwardTrace combine_traces(const std::vector<BackwardTrace>& traces) {
  if (traces.empty()) fail("combine_traces: empty batch");
  BackwardTrace combined = traces.front();
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (std::size_t k = 0; k < combined.per_layer.size(); ++k) {
    LayerTrace& lt = combined.per_layer[k];
    if (!lt.has_param) continue;
    ParamDelta sum;
    double min_step = kInf;
    double gain_sum = 0.0;
    bool any = false;
    for (const BackwardTrace& t : traces) {
      const LayerTrace& src = t.per_layer[k];
      if (src.delta.degenerate) continue;
      any = true;
      min_step = std::min(min_step, src.step);
      gain_sum += src.gain;
      if (!src.delta.dW.empty()) {
        if (sum.dW.empty()) sum.dW = Mat(src.delta.dW.rows(), src.delta.dW.cols(), 0.0);
        for (std::size_t i = 0; i < sum.dW.data().size(); ++i)
          sum.dW.data()[i] += src.delta.dW.data()[i];
      }
      if (!src.delta.dbias.empty()) {
        if (sum.dbias.empty()) sum.dbias.assign(src.delta.dbias.size(), 0.0);
        for (std::size_t i = 0; i < sum.dbias.size(); ++i) sum.dbias[i] += src.delta.dbias[i];
      }
      if (!src.delta.dtaps.empty()) {
        if (sum.dtaps.empty()) sum.dtaps.assign(src.delta.dtaps.size(), 0.0);
        for (std::size_t i = 0; i < sum.dtaps.size(); ++i) sum.dtaps[i] += src.delta.dtaps[i];
      }
    }
    if (!any) {
      lt.delta = ParamDelta{};
      lt.delta.degenerate = true;
      lt.step = 0.0;
      lt.gain = 0.0;
      continue;
    }
    double n2 = 0.0;
    for (double v : sum.dW.data()) n2 += v * v;
    for (double v : sum.dbias) n2 += v * v;
    for (double v : sum.dtaps) n2 += v * v;
    const double n = std::sqrt(n2);
    if (n == 0.0) {
      lt.delta = ParamDelta{};
      lt.delta.degenerate = true;
      lt.step = 0.0;
      lt.gain = 0.0;
      continue;
    }
    for (auto& v : sum.dW.data()) v /= n;
    for (auto& v : sum.dbias) v /= n;
    for (auto& v : sum.dtaps) v /= n;
    sum.norm = 1.0;
    sum.degenerate = false;
    lt.delta = std::move(sum);
    lt.step = min_step;
    lt.gain = gain_sum * inv;
  }
  return combined;
}

Vec joint_directional_response(const Layer& layer, const Vec& x, const ParamDelta& scaled,
                               const Vec& v_in, double tie_tol) {
  const bool has_dW = !scaled.dW.empty();
  const bool has_taps = !scaled.dtaps.empty();
  switch (layer.kind) {
    case LayerKind::DenseDilation: {
      const SupportSets J = support_sets_wrt_params(layer.W, x, tie_tol);
      Vec out(J.size(), -kInf);
      for (std::size_t i = 0; i < J.size(); ++i)
        for (std::size_t j : J.sets[i]) {
          const double slope = (has_dW ? scaled.dW(i, j) : 0.0) + v_in[j];
          out[i] = std::max(out[i], slope);
        }
      return out;
    }
    case LayerKind::AntiDilation: {
      const SupportSets J = support_sets_wrt_params(layer.W, negated(x), tie_tol);
      Vec out(J.size(), -kInf);
      for (std::size_t i = 0; i < J.size(); ++i)
        for (std::size_t j : J.sets[i]) {
          const double slope = (has_dW ? scaled.dW(i, j) : 0.0) - v_in[j];
          out[i] = std::max(out[i], slope);
        }
      return out;
    }
    case LayerKind::DenseErosion: {
      const SupportSets J = erosion_support_sets(layer.W, x, tie_tol);
      Vec out(J.size(), kInf);
      for (std::size_t j = 0; j < J.size(); ++j)
        for (std::size_t k : J.sets[j]) {
          const double slope = v_in[k] - (has_dW ? scaled.dW(k, j) : 0.0);
          out[j] = std::min(out[j], slope);
        }
      return out;
    }
    case LayerKind::AntiErosion: {
      const SupportSets J = erosion_support_sets(layer.W, negated(x), tie_tol);
      Vec out(J.size(), kInf);
      for (std::size_t j = 0; j < J.size(); ++j)
        for (std::size_t k : J.sets[j]) {
          const double slope = -v_in[k] - (has_dW ? scaled.dW(k, j) : 0.0);
          out[j] = std::min(out[j], slope);
        }
      return out;
    }
    case LayerKind::ConvDilation: {
      const Mat blocks = windows_from_signal(x, layer.taps.size());
      const SupportSets J = conv_support_sets(layer.taps, blocks, tie_tol);
      Vec out(J.size(), -kInf);
      for (std::size_t i = 0; i < J.size(); ++i)
        for (std::size_t j : J.sets[i]) {
          const double slope = (has_taps ? scaled.dtaps[j] : 0.0) + v_in[i + j];
          out[i] = std::max(out[i], slope);
        }
      return out;
    }
    case LayerKind::Linear: {
      Vec out(layer.W.rows(), 0.0);
      for (std::size_t i = 0; i < layer.W.rows(); ++i) {
        double s = scaled.dbias.empty() ? 0.0 : scaled.dbias[i];
        for (std::size_t j = 0; j < layer.W.cols(); ++j) {
          s += layer.W(i, j) * v_in[j];
          if (has_dW) s += scaled.dW(i, j) * x[j];
        }
        out[i] = s;
      }
      return out;
    }
    case LayerKind::Relu: {
      Vec out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0)
          out[i] = v_in[i];
        else if (x[i] < 0.0)
          out[i] = 0.0;
        else
          out[i] = std::max(v_in[i], 0.0);
      }
      return out;
    }
    case LayerKind::SquaredErrorLoss: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        s += 2.0 * (x[i] - layer.target[i]) * v_in[i];
      return Vec{s};
    }
  }
  fail("joint_directional_response: unknown kind");
}

namespace {

void add_scaled_delta(Layer& layer, const ParamDelta& delta, double step) {
  if (delta.degenerate || step == 0.0) return;
  if (!delta.dW.empty())
    for (std::size_t i = 0; i < layer.W.data().size(); ++i)
      layer.W.data()[i] += step * delta.dW.data()[i];
  if (!delta.dbias.empty())
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      layer.bias[i] += step * delta.dbias[i];
  if (!delta.dtaps.empty())
    for (std::size_t i = 0; i < layer.taps.size(); ++i)
      layer.taps[i] += step * delta.dtaps[i];
}

ParamDelta scale_delta(const ParamDelta& delta, double step) {
  ParamDelta out;
  out.degenerate = delta.degenerate;
  if (delta.degenerate || step == 0.0) return out;
  if (!delta.dW.empty()) {
    out.dW = delta.dW;
    for (auto& v : out.dW.data()) v *= step;
  }
  if (!delta.dbias.empty()) {
    out.dbias = delta.dbias;
    for (auto& v : out.dbias) v *= step;
  }
  if (!delta.dtaps.empty()) {
    out.dtaps = delta.dtaps;
    for (auto& v : out.dtaps) v *= step;
  }
  return out;
}

}  // namespace

StepReport apply_updates(LayerStack& stack, const BackwardTrace& trace, const ForwardTrace& fwd,
                         const EngineConfig& config) {
  const std::size_t depth = stack.depth();
  if (trace.per_layer.size() != depth) fail("apply_updates: trace does not match stack");
  StepReport report;
  report.loss_before = fwd.loss;
  report.gains.resize(depth);
  report.steps.resize(depth);
  report.degenerate.resize(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    report.gains[k] = trace.per_layer[k].gain;
    report.degenerate[k] = trace.per_layer[k].has_param && trace.per_layer[k].delta.degenerate;
  }

  const LayerStack before = stack;
  double scale = 1.0;
  for (;;) {
    stack = before;
    for (std::size_t k = 0; k < depth; ++k)
      if (trace.per_layer[k].has_param)
        add_scaled_delta(stack.layers[k], trace.per_layer[k].delta,
                         scale * trace.per_layer[k].step);
    report.loss_after = forward(stack, fwd.inputs.front()).loss;
    if (!config.backtracking || report.loss_after <= report.loss_before ||
        report.backtracks >= config.max_backtracks)
      break;
    scale *= 0.5;
    ++report.backtracks;
  }
  for (std::size_t k = 0; k < depth; ++k)
    report.steps[k] = trace.per_layer[k].has_param && !trace.per_layer[k].delta.degenerate
                          ? scale * trace.per_layer[k].step
                          : 0.0;

  // Exact first-order sweep at the pre-update point with the accepted steps.
  report.vu.resize(depth + 1);
  report.fprime_v_u.resize(depth);
  report.update_misaligned.resize(depth);
  report.transport_violated.resize(depth);
  Vec v(fwd.inputs.front().size(), 0.0);
  for (std::size_t k = 0; k <= depth; ++k) {
    const TargetMessage& msg = trace.messages[k];
    report.vu[k] = msg.degenerate ? 0.0 : dot(v, msg.u);
    if (k == depth) break;
    const Layer& layer = before.layers[k];
    const ParamDelta scaled = scale_delta(trace.per_layer[k].delta, report.steps[k]);
    const Vec input_only =
        joint_directional_response(layer, fwd.inputs[k], ParamDelta{}, v, config.tie_tol);
    const TargetMessage& received = trace.messages[k + 1];
    report.fprime_v_u[k] = received.degenerate ? 0.0 : dot(input_only, received.u);
    report.update_misaligned[k] = trace.per_layer[k].has_param && report.gains[k] < 0.0;
    report.transport_violated[k] = report.vu[k] >= 0.0 && report.fprime_v_u[k] < 0.0;
    v = joint_directional_response(layer, fwd.inputs[k], scaled, v, config.tie_tol);
  }
  return report;
}

MonitorStats property_monitor(const StepReport& report) {
  MonitorStats stats;
  stats.layers = report.update_misaligned.size();
  for (std::size_t k = 0; k < stats.layers; ++k) {
    if (report.update_misaligned[k]) ++stats.update_misalignments;
    if (report.transport_violated[k]) ++stats.transport_violations;
  }
  return stats;
}

namespace {

nlohmann::json layer_to_json(const Layer& layer) {
  nlohmann::json j;
  j["kind"] = layer_kind_name(layer.kind);
  switch (layer.kind) {
    case LayerKind::DenseDilation:
    case LayerKind::DenseErosion:
    case LayerKind::AntiDilation:
    case LayerKind::AntiErosion:
      j["rows"] = layer.W.rows();
      j["cols"] = layer.W.cols();
      j["weights"] = layer.W.data();
      break;
    case LayerKind::Linear:
      j["rows"] = layer.W.rows();
      j["cols"] = layer.W.cols();
      j["weights"] = layer.W.data();
      j["bias"] = layer.bias;
      break;
    case LayerKind::ConvDilation:
      j["taps"] = layer.taps;
      break;
    case LayerKind::SquaredErrorLoss:
      j["target"] = layer.target;
      break;
    case LayerKind::Relu:
      break;
  }
  return j;
}

Mat mat_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto weights = j.at("weights").get<Vec>();
  if (weights.size() != rows * cols)
    fail("stack_from_json: weights length does not match rows*cols");
  Mat W(rows, cols);
  W.data() = weights;
  return W;
}

Layer layer_from_json(const nlohmann::json& j) {
  const LayerKind kind = layer_kind_from_name(j.at("kind").get<std::string>());
  switch (kind) {
    case LayerKind::DenseDilation:
      return dense_dilation(mat_from_json(j));
    case LayerKind::DenseErosion:
      return dense_erosion(mat_from_json(j));
    case LayerKind::AntiDilation:
      return anti_dilation(mat_from_json(j));
    case LayerKind::AntiErosion:
      return anti_erosion(mat_from_json(j));
    case LayerKind::Linear:
      return linear(mat_from_json(j), j.at("bias").get<Vec>());
    case LayerKind::ConvDilation:
      return conv_dilation(j.at("taps").get<Vec>());
    case LayerKind::Relu:
      return relu();
    case LayerKind::SquaredErrorLoss:
      return squared_error_loss(j.at("target").get<Vec>());
  }
  fail("layer_from_json: unknown kind");
}

}  // namespace

std::string stack_to_json_string(const LayerStack& stack) {
  nlohmann::json j;
  j["version"] = 1;
  j["layers"] = nlohmann::json::array();
  for (const Layer& layer : stack.layers) j["layers"].push_back(layer_to_json(layer));
  return j.dump(2);
}

LayerStack stack_from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1) fail("stack_from_json: unsupported version");
  LayerStack stack;
  for (const auto& lj : j.at("layers")) stack.layers.push_back(layer_from_json(lj));
  return stack;
}

void save_stack(const LayerStack& stack, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("save_stack: cannot open " + path.string());
  out << stack_to_json_string(stack) << '\n';
}

LayerStack load_stack(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("load_stack: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return stack_from_json_string(buf.str());
}

}  // namespace morpho::chain
