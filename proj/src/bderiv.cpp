#include "morpho/bderiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morpho {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_sets(const SupportSets& J, const std::string& where) {
  for (const auto& set : J.sets) {
    if (set.empty()) fail(where + ": empty support set");
    for (std::size_t j : set)
      if (j >= J.source_dim) fail(where + ": support index out of range");
  }
}
}  // namespace

bool SupportSets::contains(std::size_t i, std::size_t j) const {
  const auto& set = sets[i];
  return std::binary_search(set.begin(), set.end(), j);
}

bool SupportSets::all_singleton() const {
  for (const auto& set : sets)
    if (set.size() != 1) return false;
  return true;
}

Vec dilation_row_maxima(const Mat& W, const Vec& x) {
  if (W.cols() != x.size()) fail("dilation_row_maxima: W.cols != x.dim");
  Vec phi(W.rows(), -kInf);
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j)
      phi[i] = std::max(phi[i], W(i, j) + x[j]);
  return phi;
}

SupportSets support_sets_wrt_params(const Mat& W, const Vec& x, double tie_tol) {
  if (W.cols() != x.size()) fail("support_sets_wrt_params: W.cols != x.dim");
  if (tie_tol < 0.0) fail("support_sets_wrt_params: tie_tol must be >= 0");
  const Vec phi = dilation_row_maxima(W, x);
  SupportSets J;
  J.source_dim = W.cols();
  J.sets.resize(W.rows());
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j)
      if (W(i, j) + x[j] >= phi[i] - tie_tol) J.sets[i].push_back(j);
  return J;
}

Vec bderiv_wrt_params(const SupportSets& J, const Mat& H) {
  check_sets(J, "bderiv_wrt_params");
  if (H.rows() != J.size() || H.cols() != J.source_dim)
    fail("bderiv_wrt_params: H shape does not match supports");
  Vec out(J.size(), -kInf);
  for (std::size_t i = 0; i < J.size(); ++i)
    for (std::size_t j : J.sets[i]) out[i] = std::max(out[i], H(i, j));
  return out;
}

Vec bderiv_wrt_input(const SupportSets& J, const Vec& h) {
  check_sets(J, "bderiv_wrt_input");
  if (h.size() != J.source_dim) fail("bderiv_wrt_input: h dim does not match supports");
  Vec out(J.size(), -kInf);
  for (std::size_t i = 0; i < J.size(); ++i)
    for (std::size_t j : J.sets[i]) out[i] = std::max(out[i], h[j]);
  return out;
}

namespace {

// Shared range computation: value(i,k) is the branch value, slope(i,k) its
// derivative along the direction. Support branches per row carry the row
// extremum `best(i)`; a non-support branch overtakes at
// (best - value) / (slope - support_slope) when its slope is steeper.
// `maximizing` selects max-plus (true) or min-plus (false) orientation.
template <typename ValueFn, typename SlopeFn>
AffineRange generic_range(const SupportSets& J, std::size_t cols, bool maximizing,
                          ValueFn value, SlopeFn slope) {
  AffineRange r;
  const std::size_t m = J.size();
  r.per_row.assign(m, kInf);
  r.eta.assign(m, kInf);
  r.epsilon = kInf;
  for (std::size_t i = 0; i < m; ++i) {
    double support_slope = maximizing ? -kInf : kInf;
    for (std::size_t j : J.sets[i])
      support_slope = maximizing ? std::max(support_slope, slope(i, j))
                                 : std::min(support_slope, slope(i, j));
    double extremum = value(i, J.sets[i].front());
    auto it = J.sets[i].begin();
    for (std::size_t k = 0; k < cols; ++k) {
      if (it != J.sets[i].end() && *it == k) {
        ++it;
        continue;
      }
      const double gap = maximizing ? extremum - value(i, k) : value(i, k) - extremum;
      r.eta[i] = std::min(r.eta[i], gap);
      const double rise = maximizing ? slope(i, k) - support_slope : support_slope - slope(i, k);
      if (rise > 0.0) r.per_row[i] = std::min(r.per_row[i], gap / rise);
    }
    r.epsilon = std::min(r.epsilon, r.per_row[i]);
  }
  return r;
}

}  // namespace

AffineRange affine_range_wrt_params(const Mat& W, const Vec& x, const Mat& H,
                                    const SupportSets& J) {
  check_sets(J, "affine_range_wrt_params");
  if (!W.same_shape(H)) fail("affine_range_wrt_params: W and H shapes differ");
  if (W.cols() != x.size()) fail("affine_range_wrt_params: W.cols != x.dim");
  return generic_range(
      J, W.cols(), true, [&](std::size_t i, std::size_t k) { return W(i, k) + x[k]; },
      [&](std::size_t i, std::size_t k) { return H(i, k); });
}

AffineRange affine_range_wrt_input(const Mat& W, const Vec& x, const Vec& h,
                                   const SupportSets& J) {
  check_sets(J, "affine_range_wrt_input");
  if (W.cols() != x.size()) fail("affine_range_wrt_input: W.cols != x.dim");
  if (h.size() != x.size()) fail("affine_range_wrt_input: h dim != x.dim");
  return generic_range(
      J, W.cols(), true, [&](std::size_t i, std::size_t k) { return W(i, k) + x[k]; },
      [&](std::size_t, std::size_t k) { return h[k]; });
}

Vec erosion_row_minima(const Mat& W, const Vec& y) {
  if (W.rows() != y.size()) fail("erosion_row_minima: W.rows != y.dim");
  Vec psi(W.cols(), kInf);
  for (std::size_t j = 0; j < W.cols(); ++j)
    for (std::size_t k = 0; k < W.rows(); ++k)
      psi[j] = std::min(psi[j], y[k] - W(k, j));
  return psi;
}

SupportSets erosion_support_sets(const Mat& W, const Vec& y, double tie_tol) {
  if (W.rows() != y.size()) fail("erosion_support_sets: W.rows != y.dim");
  if (tie_tol < 0.0) fail("erosion_support_sets: tie_tol must be >= 0");
  const Vec psi = erosion_row_minima(W, y);
  SupportSets J;
  J.source_dim = W.rows();
  J.sets.resize(W.cols());
  for (std::size_t j = 0; j < W.cols(); ++j)
    for (std::size_t k = 0; k < W.rows(); ++k)
      if (y[k] - W(k, j) <= psi[j] + tie_tol) J.sets[j].push_back(k);
  return J;
}

Vec erosion_bderiv_wrt_params(const SupportSets& J, const Mat& H) {
  check_sets(J, "erosion_bderiv_wrt_params");
  if (H.rows() != J.source_dim || H.cols() != J.size())
    fail("erosion_bderiv_wrt_params: H shape does not match supports");
  Vec out(J.size(), kInf);
  for (std::size_t j = 0; j < J.size(); ++j)
    for (std::size_t k : J.sets[j]) out[j] = std::min(out[j], -H(k, j));
  return out;
}

Vec erosion_bderiv_wrt_input(const SupportSets& J, const Vec& h) {
  check_sets(J, "erosion_bderiv_wrt_input");
  if (h.size() != J.source_dim) fail("erosion_bderiv_wrt_input: h dim does not match supports");
  Vec out(J.size(), kInf);
  for (std::size_t j = 0; j < J.size(); ++j)
    for (std::size_t k : J.sets[j]) out[j] = std::min(out[j], h[k]);
  return out;
}

AffineRange erosion_affine_range_wrt_params(const Mat& W, const Vec& y, const Mat& H,
                                            const SupportSets& J) {
  check_sets(J, "erosion_affine_range_wrt_params");
  if (!W.same_shape(H)) fail("erosion_affine_range_wrt_params: W and H shapes differ");
  if (W.rows() != y.size()) fail("erosion_affine_range_wrt_params: W.rows != y.dim");
  return generic_range(
      J, W.rows(), false, [&](std::size_t j, std::size_t k) { return y[k] - W(k, j); },
      [&](std::size_t j, std::size_t k) { return -H(k, j); });
}

AffineRange erosion_affine_range_wrt_input(const Mat& W, const Vec& y, const Vec& h,
                                           const SupportSets& J) {
  check_sets(J, "erosion_affine_range_wrt_input");
  if (W.rows() != y.size()) fail("erosion_affine_range_wrt_input: W.rows != y.dim");
  if (h.size() != y.size()) fail("erosion_affine_range_wrt_input: h dim != y.dim");
  return generic_range(
      J, W.rows(), false, [&](std::size_t j, std::size_t k) { return y[k] - W(k, j); },
      [&](std::size_t, std::size_t k) { return h[k]; });
}

SupportSets conv_support_sets(const Vec& taps, const Mat& blocks, double tie_tol) {
  if (blocks.cols() != taps.size()) fail("conv_support_sets: blocks.cols != taps.size");
  if (tie_tol < 0.0) fail("conv_support_sets: tie_tol must be >= 0");
  SupportSets J;
  J.source_dim = taps.size();
  J.sets.resize(blocks.rows());
  for (std::size_t i = 0; i < blocks.rows(); ++i) {
    double best = -kInf;
    for (std::size_t j = 0; j < taps.size(); ++j)
      best = std::max(best, blocks(i, j) + taps[j]);
    for (std::size_t j = 0; j < taps.size(); ++j)
      if (blocks(i, j) + taps[j] >= best - tie_tol) J.sets[i].push_back(j);
  }
  return J;
}

Vec conv_bderiv_wrt_taps(const SupportSets& J, const Vec& h) {
  return bderiv_wrt_input(J, h);  // same shared-slope maximum per row
}

AffineRange conv_affine_range_wrt_taps(const Vec& taps, const Mat& blocks, const Vec& h,
                                       const SupportSets& J) {
  check_sets(J, "conv_affine_range_wrt_taps");
  if (blocks.cols() != taps.size()) fail("conv_affine_range_wrt_taps: blocks.cols != taps.size");
  if (h.size() != taps.size()) fail("conv_affine_range_wrt_taps: h dim != taps.size");
  return generic_range(
      J, taps.size(), true, [&](std::size_t i, std::size_t k) { return blocks(i, k) + taps[k]; },
      [&](std::size_t, std::size_t k) { return h[k]; });
}

double first_order_check(const std::function<Vec(const Vec&)>& f, const Vec& point,
                         const Vec& direction, const Vec& claimed_derivative,
                         const std::vector<double>& alphas) {
  const Vec f0 = f(point);
  if (f0.size() != claimed_derivative.size())
    fail("first_order_check: derivative dim does not match f output");
  double worst = 0.0;
  double prev = kInf;
  for (double a : alphas) {
    if (a <= 0.0 || a >= prev) fail("first_order_check: alphas must be positive, decreasing");
    prev = a;
    Vec p(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) p[i] = point[i] + a * direction[i];
    const Vec fa = f(p);
    for (std::size_t i = 0; i < fa.size(); ++i) {
      const double q = (fa[i] - f0[i]) / a;
      worst = std::max(worst, std::fabs(q - claimed_derivative[i]));
    }
  }
  return worst;
}

}  // namespace morpho
