// Bouligand derivatives of max-plus layers: support (argmax/argmin) sets,
// directional derivatives with respect to parameters and inputs, and the
// exact interval [0, epsilon] of step sizes over which the layer response
// to a fixed direction is affine.
//
// For a dilation row i with support set J_i and direction slope b_i =
// max_{j in J_i} h_{ij}, a non-support entry k overtakes the support branch
// at step (phi_i - (w_ik + x_k)) / (h_ik - b_i) whenever its slope exceeds
// b_i; epsilon is the smallest such step over all rows, +infinity if no
// entry can overtake. Erosions mirror this with argmin sets and slopes
// negated; the sliding-window (shared-tap) case uses one slope per tap.
#pragma once

#include <functional>
#include <vector>

#include "morpho/maxplus.hpp"

namespace morpho {

struct SupportSets {
  // sets[i] = indices attaining the row extremum, ascending; source_dim is
  // the number of candidate indices per row (the input dimension).
  std::vector<std::vector<std::size_t>> sets;
  std::size_t source_dim = 0;

  std::size_t size() const { return sets.size(); }
  std::size_t multiplicity(std::size_t i) const { return sets[i].size(); }
  bool contains(std::size_t i, std::size_t j) const;
  bool all_singleton() const;
};

struct AffineRange {
  double epsilon = 0.0;  // min over rows; +infinity when nothing can overtake
  Vec per_row;           // epsilon_i per output index
  Vec eta;               // slack phi_i - best non-support value (direction-free)
};

// J_i = { j : w_ij + x_j >= phi_i - tie_tol }, phi_i = max_j (w_ij + x_j).
SupportSets support_sets_wrt_params(const Mat& W, const Vec& x, double tie_tol = 0.0);

// Row maxima phi_i; shared by several checks.
Vec dilation_row_maxima(const Mat& W, const Vec& x);

// entry i = max_{j in J_i} H_ij
Vec bderiv_wrt_params(const SupportSets& J, const Mat& H);
// entry i = max_{j in J_i} h_j
Vec bderiv_wrt_input(const SupportSets& J, const Vec& h);

// Exact affine range of delta_x(W + eta H); J must come from tie_tol 0.
AffineRange affine_range_wrt_params(const Mat& W, const Vec& x, const Mat& H,
                                    const SupportSets& J);
AffineRange affine_range_wrt_input(const Mat& W, const Vec& x, const Vec& h,
                                   const SupportSets& J);

// Erosion family; supports are argmin sets of y_k - w_kj per output j.
SupportSets erosion_support_sets(const Mat& W, const Vec& y, double tie_tol = 0.0);
Vec erosion_row_minima(const Mat& W, const Vec& y);
// entry j = min_{k in J_j} (-H_kj)
Vec erosion_bderiv_wrt_params(const SupportSets& J, const Mat& H);
// entry j = min_{k in J_j} h_k
Vec erosion_bderiv_wrt_input(const SupportSets& J, const Vec& h);
AffineRange erosion_affine_range_wrt_params(const Mat& W, const Vec& y, const Mat& H,
                                            const SupportSets& J);
AffineRange erosion_affine_range_wrt_input(const Mat& W, const Vec& y, const Vec& h,
                                           const SupportSets& J);

// Sliding-window dilation with respect to its taps (one shared slope per tap).
SupportSets conv_support_sets(const Vec& taps, const Mat& blocks, double tie_tol = 0.0);
Vec conv_bderiv_wrt_taps(const SupportSets& J, const Vec& h);
AffineRange conv_affine_range_wrt_taps(const Vec& taps, const Mat& blocks, const Vec& h,
                                       const SupportSets& J);

// Worst first-order residual max_alpha ||(f(p + a d) - f(p))/a - claimed||_inf.
// Diagnostic only; alphas must be positive and decreasing.
double first_order_check(const std::function<Vec(const Vec&)>& f, const Vec& point,
                         const Vec& direction, const Vec& claimed_derivative,
                         const std::vector<double>& alphas);

}  // namespace morpho
