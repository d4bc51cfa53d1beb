// Layer stack engine: forward evaluation with cached activations, backward
// target-message propagation, parameter updates with per-layer adaptive
// steps, and an exact first-order sweep of the realized output displacement
// used to monitor the alignment properties of the backward pass.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "morpho/descent.hpp"
#include "morpho/maxplus.hpp"

namespace morpho::chain {

struct Layer {
  LayerKind kind = LayerKind::Relu;
  Mat W;       // dense morphological kinds and Linear
  Vec bias;    // Linear
  Vec taps;    // ConvDilation
  Vec target;  // SquaredErrorLoss
};

Layer dense_dilation(Mat W);
Layer dense_erosion(Mat W);
Layer anti_dilation(Mat W);
Layer anti_erosion(Mat W);
Layer conv_dilation(Vec taps);
Layer linear(Mat W, Vec bias);
Layer relu();
Layer squared_error_loss(Vec target);

bool layer_has_params(const Layer& layer);
bool layer_is_morphological(const Layer& layer);
// Output dimension for a given input dimension; throws on incompatibility.
std::size_t layer_output_dim(const Layer& layer, std::size_t in_dim);
Vec layer_forward(const Layer& layer, const Vec& x);

struct LayerStack {
  std::vector<Layer> layers;
  std::size_t depth() const { return layers.size(); }
};

// Adjacent dims must be compatible and the last layer must be the scalar
// loss; throws std::invalid_argument otherwise.
void validate_stack(const LayerStack& stack, std::size_t input_dim);

// Replaces the target vector of the trailing loss layer.
void set_loss_target(LayerStack& stack, const Vec& target);

struct ForwardTrace {
  std::vector<Vec> inputs;  // inputs[k] = cached input of layer k
  double loss = 0.0;
};
ForwardTrace forward(const LayerStack& stack, const Vec& x);

struct EngineConfig {
  double eta_max = 1.0;
  double classical_rate = 0.1;  // fixed step for linear layers
  double tie_tol = 0.0;
  bool backtracking = true;     // halve all steps while the realized loss increases
  std::size_t max_backtracks = 60;
  DegenerateMessagePolicy degenerate_policy = DegenerateMessagePolicy::ZeroDirection;
};

// Unit direction over one layer's parameters; members populated per kind.
struct ParamDelta {
  Mat dW;
  Vec dbias;
  Vec dtaps;
  double norm = 0.0;
  bool degenerate = false;
};

struct LayerTrace {
  TargetMessage incoming;  // the message this layer received
  SupportSets supports;    // morphological kinds only
  bool has_param = false;
  ParamDelta delta;
  double gain = 0.0;  // <f'_theta(theta; delta), incoming u>
  double step = 0.0;
};

struct BackwardTrace {
  // messages[k] is the target direction for the input of layer k;
  // messages[depth] is the seed message at the loss output (the scalar -1).
  std::vector<TargetMessage> messages;
  std::vector<LayerTrace> per_layer;
};
BackwardTrace backward(const LayerStack& stack, const ForwardTrace& fwd,
                       const EngineConfig& config);

// Mini-batch combination: averages the per-sample update directions
// (renormalized to unit) and takes the smallest per-layer step across the
// batch; messages and diagnostics come from the first trace.
BackwardTrace combine_traces(const std::vector<BackwardTrace>& traces);

struct StepReport {
  double loss_before = 0.0;
  double loss_after = 0.0;
  Vec gains;                       // per layer
  Vec steps;                       // per layer, after backtracking
  std::vector<double> vu;          // <v_k, u_k> at each interface, input..loss output
  std::vector<double> fprime_v_u;  // per layer: <f'_x(x_k; v_k), u_{k+1}>
  std::vector<bool> update_misaligned;      // per layer: parameter update misaligned with message
  std::vector<bool> transport_violated;     // per layer: nonneg incoming alignment turned negative
  std::vector<bool> degenerate;    // per layer: update or message degenerate
  std::size_t backtracks = 0;
};
// Applies theta_k += eta_k * delta_k, optionally backtracking all steps, and
// runs the exact first-order sweep at the pre-update point.
StepReport apply_updates(LayerStack& stack, const BackwardTrace& trace,
                         const ForwardTrace& fwd, const EngineConfig& config);

struct MonitorStats {
  std::size_t update_misalignments = 0;
  std::size_t transport_violations = 0;
  std::size_t layers = 0;
};
MonitorStats property_monitor(const StepReport& report);

// First-order response of one layer to a joint (parameter, input) direction;
// exact for max-plus layers within their affine range. Empty delta members
// count as zero.
Vec joint_directional_response(const Layer& layer, const Vec& x, const ParamDelta& scaled,
                               const Vec& v_in, double tie_tol);

// Versioned JSON serialization; weights round-trip value-exact.
std::string stack_to_json_string(const LayerStack& stack);
LayerStack stack_from_json_string(const std::string& text);
void save_stack(const LayerStack& stack, const std::filesystem::path& path);
LayerStack load_stack(const std::filesystem::path& path);

}  // namespace morpho::chain
