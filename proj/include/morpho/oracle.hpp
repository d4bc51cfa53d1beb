// Independent referee utilities: a deterministic seeded sampler, black-box
// finite-difference probes, Monte-Carlo sphere search, step-grid scans of
// affine behaviour, and constructors for random layer instances whose exact
// affine range is known by construction. Nothing here calls back into the
// derivative code it is used to check.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "morpho/maxplus.hpp"

namespace morpho::oracle {

// Deterministic stream of samples from a 64-bit seed (splitmix64 core).
// Equal seeds give equal streams; child() derives independent substreams.
class SeededSampler {
 public:
  explicit SeededSampler(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits; bit-exact across platforms.
  double uniform01();
  double uniform(double lo, double hi);
  // lo + k*step for a uniformly drawn integer k in [0, (hi-lo)/step].
  double lattice(double lo, double hi, double step);
  std::size_t index(std::size_t n);  // uniform in [0, n)
  double gauss();
  Vec gauss_vec(std::size_t dim);
  Vec unit_vector(std::size_t dim);
  Vec lattice_vec(std::size_t dim, double lo, double hi, double step);
  Mat lattice_mat(std::size_t rows, std::size_t cols, double lo, double hi, double step);

  SeededSampler child(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t draws_ = 0;
  bool have_spare_gauss_ = false;
  double spare_gauss_ = 0.0;
};

struct FdResult {
  std::vector<Vec> quotients;  // (f(x + a*d) - f(x)) / a, one per alpha
  bool exact;                  // all quotients bitwise identical
};

// Forward-difference quotients of a black-box vector function along d.
// alphas must be strictly positive and decreasing.
FdResult directional_derivative_fd(const std::function<Vec(const Vec&)>& f,
                                   const Vec& x, const Vec& d,
                                   const std::vector<double>& alphas);

struct SphereSearchResult {
  Vec direction;
  double value;
};

// Best of `samples` uniformly drawn unit directions (Gaussian normalized).
SphereSearchResult sphere_search(const std::function<double(const Vec&)>& objective,
                                 std::size_t dim, std::size_t samples,
                                 SeededSampler& sampler);

// Scans g against its claimed affine model g(0) + eta*slope over a step grid.
// Verdict: equality holds bitwise at every grid point <= epsilon_claimed and,
// when epsilon_claimed is finite and the grid reaches past it, fails at the
// first grid point beyond it.
bool eta_grid_scan(const std::function<Vec(double)>& g, const Vec& base,
                   const Vec& slope, double epsilon_claimed,
                   const std::vector<double>& grid);

// Grid of `points + 1` equally spaced values covering [0, span].
std::vector<double> linear_grid(double span, std::size_t points = 64);

// ---------------------------------------------------------------------------
// Planted instances.
//
// All entries live on dyadic lattices (weights and inputs on a 1/16 grid,
// directions integer, the planted bound on a 1/1024 grid with a power-of-two
// binding denominator), so that every add/max/quotient used when checking
// first-order behaviour is exact in binary64 and equality tests can be
// bitwise. `epsilon` is the exact largest step with affine behaviour, and
// (binding_row, binding_col) identifies the entry that attains it.
// ---------------------------------------------------------------------------

struct PlantedParamInstance {
  Mat W;
  Vec x;
  Mat H;
  double epsilon;
  std::size_t binding_row;
  std::size_t binding_col;
};

struct PlantedInputInstance {
  Mat W;
  Vec x;
  Vec h;
  double epsilon;
  std::size_t binding_row;
  std::size_t binding_col;
};

struct PlantedConvInstance {
  Vec taps;
  Mat blocks;
  Vec h;  // direction on the taps
  double epsilon;
  std::size_t binding_row;
  std::size_t binding_col;
};

// Dilation delta_x(W + eta H); requires n >= 2.
PlantedParamInstance planted_dilation_param(SeededSampler& s, std::size_t m, std::size_t n);
// Dilation delta_W(x + eta h); requires n >= 2.
PlantedInputInstance planted_dilation_input(SeededSampler& s, std::size_t m, std::size_t n);
// Erosion counterparts, derived from dilation plants through the negation
// duality ero_W(y) = -dil_{W^T}(-y); W is m x n, y has dim m, outputs dim n.
PlantedParamInstance planted_erosion_param(SeededSampler& s, std::size_t m, std::size_t n);
PlantedInputInstance planted_erosion_input(SeededSampler& s, std::size_t m, std::size_t n);
// Sliding-window dilation with respect to its taps; requires p >= 2.
PlantedConvInstance planted_conv_taps(SeededSampler& s, std::size_t n, std::size_t p);

// Random lattice pair (W, x) with optional forced support ties per row.
// Used where exact-arithmetic layer identities are required but no planted
// bound is needed.
struct LatticeLayerInstance {
  Mat W;
  Vec x;
};
LatticeLayerInstance lattice_dilation_instance(SeededSampler& s, std::size_t m, std::size_t n,
                                               bool force_ties);

}  // namespace morpho::oracle
