// Candidate parameter updates and backward messages for max-plus layers,
// with the closed-form alignment (gain) identities and adaptive step sizes
// that keep each update inside the exact affine range of its layer.
#pragma once

#include <cstdint>
#include <vector>

#include "morpho/bderiv.hpp"
#include "morpho/maxplus.hpp"
#include "morpho/oracle.hpp"

namespace morpho {

// Unit target direction received from later layers; degenerate when the raw
// message was zero (nothing to aim for).
struct TargetMessage {
  Vec u;
  bool degenerate = false;

  static TargetMessage from_raw(const Vec& raw);
};

struct SignSplit {
  std::vector<std::size_t> plus;   // u_i >= 0
  std::vector<std::size_t> minus;  // u_i < 0
};
SignSplit sign_split(const Vec& u);

struct MatDirection {
  Mat entries;
  double norm = 0.0;
  bool degenerate = false;
};

struct VecDirection {
  Vec entries;
  double norm = 0.0;
  bool degenerate = false;
};

struct UpdateProposal {
  MatDirection direction;
  double predicted_gain = 0.0;  // <bderiv(J, direction), u>, closed form
  AffineRange range;            // filled by the step-selection stage
  double chosen_step = 0.0;
};

// What to pass on when a message collapses to zero: a flagged zero direction
// (default), or an arbitrary unit vector.
enum class DegenerateMessagePolicy { ZeroDirection, ArbitraryUnit };

// Unit-norm update direction for a dilation parameter matrix. Rows with
// u_i >= 0 put u_i on the lowest-index support slot; rows with u_i < 0
// spread u_i / sqrt(p_i) over all p_i support slots. The alignment with u is
// exactly 1 - sum_{u_i<0} (1 - 1/sqrt(p_i)) u_i^2 and is at least 1/sqrt(n).
UpdateProposal candidate_delta_w(const SupportSets& J, const TargetMessage& u);

// |<bderiv(J, H), u> - closed-form gain|; diagnostic.
double gain_identity_check(const SupportSets& J, const TargetMessage& u, const MatDirection& H);

// Step size for the candidate above: the specialized bound
// min_{u_i<0} eta_i sqrt(p_i) / |u_i| combined with the general affine range
// of (W, x, H), capped at eta_max.
double learning_rate_param(const Mat& W, const Vec& x, const SupportSets& J,
                           const TargetMessage& u, const MatDirection& H, double eta_max);

// Backward message through a dilation: E^T u / ||E^T u|| with E_ij = 1 iff
// j in J_i; zero + degenerate flag (or an arbitrary unit vector, by policy)
// when E^T u vanishes.
VecDirection message_candidate(const SupportSets& J, const TargetMessage& u,
                               DegenerateMessagePolicy policy = DegenerateMessagePolicy::ZeroDirection);

// Same construction restricted to pairwise disjoint supports (max-pooling
// like); rejects overlapping supports.
VecDirection message_candidate_disjoint(const SupportSets& J, const TargetMessage& u);

struct MessageAudit {
  bool degenerate = false;
  bool forward_align = false;               // <bderiv_input(J, h), u> >= 0
  std::size_t halfspace_violations = 0; // sampled v, <v,h> >= 0 but <bderiv_input(J,v),u> < 0
  std::size_t samples = 0;
};

// Monte-Carlo audit of the message conditions; never asserts.
MessageAudit message_quality_audit(const SupportSets& J, const TargetMessage& u,
                                   const VecDirection& h, oracle::SeededSampler& sampler,
                                   std::size_t samples);

// Tap-space update for the sliding-window dilation: E^T u / ||E^T u|| with
// E_ij = 1 iff tap j attains the maximum in window i.
VecDirection conv_candidate_delta_w(const SupportSets& J_conv, const TargetMessage& u);

// Erosion mirrors of the three operations above.
UpdateProposal erosion_candidate_delta_w(const SupportSets& J, const TargetMessage& u);
double erosion_learning_rate_param(const Mat& W, const Vec& y, const SupportSets& J,
                                   const TargetMessage& u, const MatDirection& H,
                                   double eta_max);
VecDirection erosion_message_candidate(const SupportSets& J, const TargetMessage& u,
                                       DegenerateMessagePolicy policy = DegenerateMessagePolicy::ZeroDirection);

struct RefineResult {
  MatDirection direction;
  double gain = 0.0;
};

// Monotone hill-climb of <bderiv(J, .), u> on the unit sphere, seeded at H0.
// restarts > 0 adds seeded random restarts; the best of all is returned and
// never scores below the starting gain.
RefineResult local_refine(const SupportSets& J, const TargetMessage& u, const MatDirection& H0,
                          std::size_t iters, std::size_t restarts = 0,
                          std::uint64_t restart_seed = 0);

}  // namespace morpho
