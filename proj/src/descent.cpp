#include "morpho/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morpho {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double dilation_gain_closed_form(const SupportSets& J, const Vec& u) {
  double penalty = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < 0.0) {
      const double p = static_cast<double>(J.multiplicity(i));
      penalty += (1.0 - 1.0 / std::sqrt(p)) * u[i] * u[i];
    }
  }
  return 1.0 - penalty;
}

double erosion_gain_closed_form(const SupportSets& J, const Vec& u) {
  double penalty = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] > 0.0) {
      const double p = static_cast<double>(J.multiplicity(j));
      penalty += (1.0 - 1.0 / std::sqrt(p)) * u[j] * u[j];
    }
  }
  return 1.0 - penalty;
}

VecDirection normalized_scatter(const SupportSets& J, const TargetMessage& u,
                                std::size_t out_dim, DegenerateMessagePolicy policy) {
  VecDirection d;
  d.entries.assign(out_dim, 0.0);
  if (!u.degenerate) {
    for (std::size_t i = 0; i < J.size(); ++i)
      for (std::size_t j : J.sets[i]) d.entries[j] += u.u[i];
  }
  const double n = norm2(d.entries);
  if (n == 0.0) {
    if (policy == DegenerateMessagePolicy::ArbitraryUnit) {
      d.entries.assign(out_dim, 0.0);
      d.entries[0] = 1.0;
      d.norm = 1.0;
      d.degenerate = false;
    } else {
      d.norm = 0.0;
      d.degenerate = true;
    }
    return d;
  }
  for (auto& v : d.entries) v /= n;
  d.norm = norm2(d.entries);
  d.degenerate = false;
  return d;
}

}  // namespace

TargetMessage TargetMessage::from_raw(const Vec& raw) {
  require_finite(raw, "TargetMessage::from_raw");
  TargetMessage m;
  const double n = norm2(raw);
  if (n == 0.0) {
    m.u.assign(raw.size(), 0.0);
    m.degenerate = true;
    return m;
  }
  m.u.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) m.u[i] = raw[i] / n;
  return m;
}

SignSplit sign_split(const Vec& u) {
  SignSplit s;
  for (std::size_t i = 0; i < u.size(); ++i)
    (u[i] >= 0.0 ? s.plus : s.minus).push_back(i);
  return s;
}

UpdateProposal candidate_delta_w(const SupportSets& J, const TargetMessage& u) {
  if (u.u.size() != J.size()) fail("candidate_delta_w: u dim does not match supports");
  UpdateProposal prop;
  prop.direction.entries = Mat(J.size(), J.source_dim, 0.0);
  if (u.degenerate) {
    prop.direction.degenerate = true;
    return prop;
  }
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (u.u[i] >= 0.0) {
      prop.direction.entries(i, J.sets[i].front()) = u.u[i];
    } else {
      const double share = u.u[i] / std::sqrt(static_cast<double>(J.multiplicity(i)));
      for (std::size_t j : J.sets[i]) prop.direction.entries(i, j) = share;
    }
  }
  prop.direction.norm = frobenius_norm(prop.direction.entries);
  prop.predicted_gain = dilation_gain_closed_form(J, u.u);
  return prop;
}

double gain_identity_check(const SupportSets& J, const TargetMessage& u, const MatDirection& H) {
  const Vec deriv = bderiv_wrt_params(J, H.entries);
  return std::fabs(dot(deriv, u.u) - dilation_gain_closed_form(J, u.u));
}

double learning_rate_param(const Mat& W, const Vec& x, const SupportSets& J,
                           const TargetMessage& u, const MatDirection& H, double eta_max) {
  if (eta_max <= 0.0) fail("learning_rate_param: eta_max must be > 0");
  const AffineRange general = affine_range_wrt_params(W, x, H.entries, J);
  // Specialized bound for the candidate direction, from its own slack scan:
  // min over { i : u_i < 0 } of eta_i * sqrt(p_i) / |u_i|.
  const Vec phi = dilation_row_maxima(W, x);
  double specialized = kInf;
  for (std::size_t i = 0; i < u.u.size(); ++i) {
    if (u.u[i] >= 0.0) continue;
    double eta_i = kInf;
    for (std::size_t k = 0; k < W.cols(); ++k)
      if (!J.contains(i, k)) eta_i = std::min(eta_i, phi[i] - (W(i, k) + x[k]));
    if (std::isfinite(eta_i)) {
      const double p = static_cast<double>(J.multiplicity(i));
      specialized = std::min(specialized, eta_i * std::sqrt(p) / std::fabs(u.u[i]));
    }
  }
  return std::min({specialized, general.epsilon, eta_max});
}

VecDirection message_candidate(const SupportSets& J, const TargetMessage& u,
                               DegenerateMessagePolicy policy) {
  if (u.u.size() != J.size()) fail("message_candidate: u dim does not match supports");
  return normalized_scatter(J, u, J.source_dim, policy);
}

VecDirection message_candidate_disjoint(const SupportSets& J, const TargetMessage& u) {
  if (u.u.size() != J.size()) fail("message_candidate_disjoint: u dim does not match supports");
  std::vector<bool> seen(J.source_dim, false);
  for (const auto& set : J.sets)
    for (std::size_t j : set) {
      if (seen[j]) fail("message_candidate_disjoint: supports overlap");
      seen[j] = true;
    }
  VecDirection d;
  d.entries.assign(J.source_dim, 0.0);
  if (u.degenerate) {
    d.degenerate = true;
    return d;
  }
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (u.u[i] >= 0.0) {
      d.entries[J.sets[i].front()] = u.u[i];
    } else {
      const double share = u.u[i] / std::sqrt(static_cast<double>(J.multiplicity(i)));
      for (std::size_t j : J.sets[i]) d.entries[j] = share;
    }
  }
  const double n = norm2(d.entries);
  if (n == 0.0) {
    d.degenerate = true;
    return d;
  }
  for (auto& v : d.entries) v /= n;
  d.norm = norm2(d.entries);
  return d;
}

MessageAudit message_quality_audit(const SupportSets& J, const TargetMessage& u,
                                   const VecDirection& h, oracle::SeededSampler& sampler,
                                   std::size_t samples) {
  MessageAudit audit;
  audit.samples = samples;
  if (h.degenerate || u.degenerate) {
    audit.degenerate = true;
    audit.forward_align = true;  // vacuous
    return audit;
  }
  audit.forward_align = dot(bderiv_wrt_input(J, h.entries), u.u) >= 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec v = sampler.unit_vector(J.source_dim);
    if (dot(v, h.entries) < 0.0)
      for (auto& t : v) t = -t;
    if (dot(bderiv_wrt_input(J, v), u.u) < 0.0) ++audit.halfspace_violations;
  }
  return audit;
}

VecDirection conv_candidate_delta_w(const SupportSets& J_conv, const TargetMessage& u) {
  if (u.u.size() != J_conv.size()) fail("conv_candidate_delta_w: u dim does not match supports");
  return normalized_scatter(J_conv, u, J_conv.source_dim,
                            DegenerateMessagePolicy::ZeroDirection);
}

UpdateProposal erosion_candidate_delta_w(const SupportSets& J, const TargetMessage& u) {
  if (u.u.size() != J.size()) fail("erosion_candidate_delta_w: u dim does not match supports");
  // Parameters are m x n; supports index input slots k per output column j.
  UpdateProposal prop;
  prop.direction.entries = Mat(J.source_dim, J.size(), 0.0);
  if (u.degenerate) {
    prop.direction.degenerate = true;
    return prop;
  }
  for (std::size_t j = 0; j < J.size(); ++j) {
    const double ubar = -u.u[j];
    if (ubar >= 0.0) {
      prop.direction.entries(J.sets[j].front(), j) = ubar;
    } else {
      const double share = ubar / std::sqrt(static_cast<double>(J.multiplicity(j)));
      for (std::size_t k : J.sets[j]) prop.direction.entries(k, j) = share;
    }
  }
  prop.direction.norm = frobenius_norm(prop.direction.entries);
  prop.predicted_gain = erosion_gain_closed_form(J, u.u);
  return prop;
}

double erosion_learning_rate_param(const Mat& W, const Vec& y, const SupportSets& J,
                                   const TargetMessage& u, const MatDirection& H,
                                   double eta_max) {
  if (eta_max <= 0.0) fail("erosion_learning_rate_param: eta_max must be > 0");
  const AffineRange general = erosion_affine_range_wrt_params(W, y, H.entries, J);
  const Vec psi = erosion_row_minima(W, y);
  double specialized = kInf;
  for (std::size_t j = 0; j < u.u.size(); ++j) {
    if (u.u[j] <= 0.0) continue;
    double eta_j = kInf;
    for (std::size_t k = 0; k < W.rows(); ++k)
      if (!J.contains(j, k)) eta_j = std::min(eta_j, (y[k] - W(k, j)) - psi[j]);
    if (std::isfinite(eta_j)) {
      const double p = static_cast<double>(J.multiplicity(j));
      specialized = std::min(specialized, eta_j * std::sqrt(p) / std::fabs(u.u[j]));
    }
  }
  return std::min({specialized, general.epsilon, eta_max});
}

VecDirection erosion_message_candidate(const SupportSets& J, const TargetMessage& u,
                                       DegenerateMessagePolicy policy) {
  if (u.u.size() != J.size()) fail("erosion_message_candidate: u dim does not match supports");
  return normalized_scatter(J, u, J.source_dim, policy);
}

namespace {

double support_gain(const SupportSets& J, const Vec& u, const Mat& H) {
  return dot(bderiv_wrt_params(J, H), u);
}

Mat normalized_or_zero(Mat H) {
  const double n = norm2(H.data());
  if (n > 0.0)
    for (auto& v : H.data()) v /= n;
  return H;
}

Mat climb(const SupportSets& J, const Vec& u, Mat H, std::size_t iters) {
  double best = support_gain(J, u, H);
  const double steps[] = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  for (std::size_t it = 0; it < iters; ++it) {
    bool improved = false;
    for (std::size_t i = 0; i < J.size(); ++i) {
      for (std::size_t j : J.sets[i]) {
        for (double s : steps) {
          for (double sign : {1.0, -1.0}) {
            Mat trial = H;
            trial(i, j) += sign * s;
            trial = normalized_or_zero(std::move(trial));
            const double g = support_gain(J, u, trial);
            if (g > best) {
              best = g;
              H = std::move(trial);
              improved = true;
            }
          }
        }
      }
    }
    if (!improved) break;
  }
  return H;
}

}  // namespace

RefineResult local_refine(const SupportSets& J, const TargetMessage& u, const MatDirection& H0,
                          std::size_t iters, std::size_t restarts, std::uint64_t restart_seed) {
  RefineResult result;
  if (u.degenerate || H0.degenerate) {
    result.direction = H0;
    return result;
  }
  Mat best = climb(J, u.u, H0.entries, iters);
  double best_gain = support_gain(J, u.u, best);
  oracle::SeededSampler sampler(restart_seed);
  for (std::size_t r = 0; r < restarts; ++r) {
    Mat start(H0.entries.rows(), H0.entries.cols(), 0.0);
    for (std::size_t i = 0; i < J.size(); ++i)
      for (std::size_t j : J.sets[i]) start(i, j) = sampler.gauss();
    start = normalized_or_zero(std::move(start));
    Mat refined = climb(J, u.u, start, iters);
    const double g = support_gain(J, u.u, refined);
    if (g > best_gain) {
      best_gain = g;
      best = std::move(refined);
    }
  }
  result.direction.entries = std::move(best);
  result.direction.norm = frobenius_norm(result.direction.entries);
  result.direction.degenerate = false;
  result.gain = best_gain;
  return result;
}

}  // namespace morpho
