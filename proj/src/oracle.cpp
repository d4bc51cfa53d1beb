#include "morpho/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace morpho::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15uLL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9uLL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBuLL;
  return z ^ (z >> 31);
}

// Local support computation (exact equality with the row maximum). Kept
// private so the referee does not share code with the checked modules.
std::vector<std::vector<std::size_t>> argmax_sets(const Mat& values) {
  std::vector<std::vector<std::size_t>> sets(values.rows());
  for (std::size_t i = 0; i < values.rows(); ++i) {
    double best = -kInf;
    for (std::size_t j = 0; j < values.cols(); ++j) best = std::max(best, values(i, j));
    for (std::size_t j = 0; j < values.cols(); ++j)
      if (values(i, j) == best) sets[i].push_back(j);
  }
  return sets;
}

Mat value_table_dilation(const Mat& W, const Vec& x) {
  Mat v(W.rows(), W.cols());
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j) v(i, j) = W(i, j) + x[j];
  return v;
}

Vec row_maxima(const Mat& values) {
  Vec phi(values.rows(), -kInf);
  for (std::size_t i = 0; i < values.rows(); ++i)
    for (std::size_t j = 0; j < values.cols(); ++j) phi[i] = std::max(phi[i], values(i, j));
  return phi;
}

// Shared planting core. Values are value(i,j) = slot(i,j) + offset(j); the
// slot is the adjustable lattice entry (a weight or a block entry). The
// direction slope for (i,j) is slope(i,j). Adjusts slots so that the minimal
// overtaking ratio is exactly `e`, attained at (binding_row, binding_col).
struct PlantSpec {
  std::size_t rows, cols;
  double e;
  std::size_t binding_row, binding_col;
};

constexpr double kWeightStep = 0.0625;   // 1/16
constexpr double kEpsStep = 0.0009765625;  // 1/1024

double draw_epsilon(SeededSampler& s) {
  // multiples of 1/1024 in [1/16, 8]
  return s.lattice(0.0625, 8.0, kEpsStep);
}

double draw_denominator(SeededSampler& s) {
  const double choices[3] = {1.0, 2.0, 4.0};
  return choices[s.index(3)];
}

}  // namespace

std::uint64_t SeededSampler::next_u64() {
  ++draws_;
  return splitmix64(state_);
}

double SeededSampler::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededSampler::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double SeededSampler::lattice(double lo, double hi, double step) {
  const auto count = static_cast<std::uint64_t>((hi - lo) / step) + 1;
  return lo + static_cast<double>(next_u64() % count) * step;
}

std::size_t SeededSampler::index(std::size_t n) {
  return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
}

double SeededSampler::gauss() {
  if (have_spare_gauss_) {
    have_spare_gauss_ = false;
    return spare_gauss_;
  }
  double u, v, s;
  do {
    u = uniform(-1.0, 1.0);
    v = uniform(-1.0, 1.0);
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_gauss_ = v * f;
  have_spare_gauss_ = true;
  return u * f;
}

Vec SeededSampler::gauss_vec(std::size_t dim) {
  Vec v(dim);
  for (auto& x : v) x = gauss();
  return v;
}

Vec SeededSampler::unit_vector(std::size_t dim) {
  for (;;) {
    Vec v = gauss_vec(dim);
    const double n = norm2(v);
    if (n > 1e-12) {
      for (auto& x : v) x /= n;
      return v;
    }
  }
}

Vec SeededSampler::lattice_vec(std::size_t dim, double lo, double hi, double step) {
  Vec v(dim);
  for (auto& x : v) x = lattice(lo, hi, step);
  return v;
}

Mat SeededSampler::lattice_mat(std::size_t rows, std::size_t cols, double lo, double hi,
                               double step) {
  Mat m(rows, cols);
  for (auto& x : m.data()) x = lattice(lo, hi, step);
  return m;
}

SeededSampler SeededSampler::child(std::uint64_t tag) const {
  std::uint64_t st = seed_ ^ (0xD1B54A32D192ED03uLL * (tag + 1));
  splitmix64(st);
  return SeededSampler(splitmix64(st));
}

FdResult directional_derivative_fd(const std::function<Vec(const Vec&)>& f, const Vec& x,
                                   const Vec& d, const std::vector<double>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("directional_derivative_fd: no alphas");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (alphas[i] <= 0.0) throw std::invalid_argument("directional_derivative_fd: alpha <= 0");
    if (i > 0 && alphas[i] >= alphas[i - 1])
      throw std::invalid_argument("directional_derivative_fd: alphas must decrease");
  }
  const Vec f0 = f(x);
  FdResult result;
  result.quotients.reserve(alphas.size());
  for (double a : alphas) {
    Vec xp(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xp[i] = x[i] + a * d[i];
    Vec fp = f(xp);
    Vec q(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) q[i] = (fp[i] - f0[i]) / a;
    result.quotients.push_back(std::move(q));
  }
  result.exact = true;
  for (std::size_t k = 1; k < result.quotients.size(); ++k)
    if (result.quotients[k] != result.quotients.front()) result.exact = false;
  return result;
}

SphereSearchResult sphere_search(const std::function<double(const Vec&)>& objective,
                                 std::size_t dim, std::size_t samples, SeededSampler& sampler) {
  if (samples == 0) throw std::invalid_argument("sphere_search: samples must be >= 1");
  SphereSearchResult best{sampler.unit_vector(dim), 0.0};
  best.value = objective(best.direction);
  for (std::size_t k = 1; k < samples; ++k) {
    Vec v = sampler.unit_vector(dim);
    const double val = objective(v);
    if (val > best.value) {
      best.value = val;
      best.direction = std::move(v);
    }
  }
  return best;
}

bool eta_grid_scan(const std::function<Vec(double)>& g, const Vec& base, const Vec& slope,
                   double epsilon_claimed, const std::vector<double>& grid) {
  for (double eta : grid) {
    const Vec got = g(eta);
    Vec want(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) want[i] = base[i] + eta * slope[i];
    const bool equal = got == want;
    if (eta <= epsilon_claimed) {
      if (!equal) return false;
    } else {
      return !equal;  // first grid point past the claimed bound must break
    }
  }
  return true;
}

std::vector<double> linear_grid(double span, std::size_t points) {
  std::vector<double> grid(points + 1);
  for (std::size_t k = 0; k <= points; ++k)
    grid[k] = span * (static_cast<double>(k) / static_cast<double>(points));
  return grid;
}

namespace {

// Core of the planted constructions below. `slot` addresses the adjustable
// lattice entries; value(i,j) = slot(i,j) + offset(j). Slopes may be per-entry
// (parameter directions) or shared per column (input/tap directions).
class SlotTable {
 public:
  SlotTable(Mat& slots, const Vec& offsets) : slots_(slots), offsets_(offsets) {}
  double value(std::size_t i, std::size_t j) const { return slots_(i, j) + offsets_[j]; }
  void set_value(std::size_t i, std::size_t j, double v) { slots_(i, j) = v - offsets_[j]; }
  std::size_t rows() const { return slots_.rows(); }
  std::size_t cols() const { return slots_.cols(); }
  Mat values() const {
    Mat v(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) v(i, j) = value(i, j);
    return v;
  }

 private:
  Mat& slots_;
  const Vec& offsets_;
};

// Plants a binding ratio of exactly `e` at (i*, k*) and pushes every other
// overtaking ratio to at least 2e. `slope` is evaluated per (row, col).
PlantSpec plant(SeededSampler& s, SlotTable table,
                const std::function<double(std::size_t, std::size_t)>& slope,
                const std::function<void(std::size_t, std::size_t, double)>& bump_slope) {
  const std::size_t m = table.rows(), n = table.cols();

  // Random support ties: duplicate the row maximum at a second slot.
  for (std::size_t i = 0; i < m; ++i) {
    if (n >= 2 && s.index(2) == 0) {
      Vec phi = row_maxima(table.values());
      const std::size_t j2 = s.index(n);
      table.set_value(i, j2, phi[i]);
    }
  }

  // Binding slot: first force it strictly below its row maximum so the
  // support sets computed next do not contain it.
  const std::size_t bi = s.index(m);
  Mat vals = table.values();
  std::size_t jmax = 0;
  for (std::size_t j = 1; j < n; ++j)
    if (vals(bi, j) > vals(bi, jmax)) jmax = j;
  std::size_t bk = s.index(n);
  if (bk == jmax) bk = (bk + 1) % n;
  Vec phi = row_maxima(vals);
  table.set_value(bi, bk, phi[bi] - 1.0);

  const auto supports = argmax_sets(table.values());

  // Raise the binding slope above the support slope by a power-of-two margin
  // and place the slot value so the overtaking ratio is exactly e.
  double b_star = -kInf;
  for (std::size_t j : supports[bi]) b_star = std::max(b_star, slope(bi, j));
  const double den = draw_denominator(s);
  bump_slope(bi, bk, b_star + den);
  const double e = draw_epsilon(s);
  table.set_value(bi, bk, phi[bi] - e * den);

  // Push every other overtaking ratio to at least 2e.
  for (std::size_t i = 0; i < m; ++i) {
    double b = -kInf;
    for (std::size_t j : supports[i]) b = std::max(b, slope(i, j));
    auto it = supports[i].begin();
    for (std::size_t k = 0; k < n; ++k) {
      if (it != supports[i].end() && *it == k) {
        ++it;
        continue;
      }
      if (i == bi && k == bk) continue;
      const double sk = slope(i, k);
      if (sk > b) {
        const double gap = phi[i] - table.value(i, k);
        const double need = 2.0 * e * (sk - b);
        if (gap < need) table.set_value(i, k, phi[i] - need);
      }
    }
  }
  return PlantSpec{m, n, e, bi, bk};
}

}  // namespace

PlantedParamInstance planted_dilation_param(SeededSampler& s, std::size_t m, std::size_t n) {
  if (n < 2) throw std::invalid_argument("planted_dilation_param: need n >= 2");
  PlantedParamInstance inst;
  inst.W = s.lattice_mat(m, n, -8.0, 8.0, kWeightStep);
  inst.x = s.lattice_vec(n, -8.0, 8.0, kWeightStep);
  inst.H = s.lattice_mat(m, n, -4.0, 4.0, 1.0);
  SlotTable table(inst.W, inst.x);
  const PlantSpec spec =
      plant(s, table, [&](std::size_t i, std::size_t j) { return inst.H(i, j); },
            [&](std::size_t i, std::size_t j, double v) { inst.H(i, j) = v; });
  inst.epsilon = spec.e;
  inst.binding_row = spec.binding_row;
  inst.binding_col = spec.binding_col;
  return inst;
}

PlantedInputInstance planted_dilation_input(SeededSampler& s, std::size_t m, std::size_t n) {
  if (n < 2) throw std::invalid_argument("planted_dilation_input: need n >= 2");
  PlantedInputInstance inst;
  inst.W = s.lattice_mat(m, n, -8.0, 8.0, kWeightStep);
  inst.x = s.lattice_vec(n, -8.0, 8.0, kWeightStep);
  inst.h = s.lattice_vec(n, -4.0, 4.0, 1.0);
  SlotTable table(inst.W, inst.x);
  const PlantSpec spec =
      plant(s, table, [&](std::size_t, std::size_t j) { return inst.h[j]; },
            [&](std::size_t, std::size_t j, double v) { inst.h[j] = v; });
  inst.epsilon = spec.e;
  inst.binding_row = spec.binding_row;
  inst.binding_col = spec.binding_col;
  return inst;
}

PlantedParamInstance planted_erosion_param(SeededSampler& s, std::size_t m, std::size_t n) {
  // ero_y(W + eta H) = -dil_z(A + eta G) with A = W^T, z = -y, G = H^T, so a
  // dilation plant with shape (n x m) transfers with the same exact epsilon.
  if (m < 2) throw std::invalid_argument("planted_erosion_param: need m >= 2");
  const PlantedParamInstance dil = planted_dilation_param(s, n, m);
  PlantedParamInstance inst;
  inst.W = dil.W.transposed();
  inst.x.resize(dil.x.size());
  for (std::size_t k = 0; k < dil.x.size(); ++k) inst.x[k] = -dil.x[k];
  inst.H = dil.H.transposed();
  inst.epsilon = dil.epsilon;
  // binding output index (column of W) and competing input index (row of W)
  inst.binding_row = dil.binding_col;
  inst.binding_col = dil.binding_row;
  return inst;
}

PlantedInputInstance planted_erosion_input(SeededSampler& s, std::size_t m, std::size_t n) {
  if (m < 2) throw std::invalid_argument("planted_erosion_input: need m >= 2");
  const PlantedInputInstance dil = planted_dilation_input(s, n, m);
  PlantedInputInstance inst;
  inst.W = dil.W.transposed();
  inst.x.resize(dil.x.size());
  for (std::size_t k = 0; k < dil.x.size(); ++k) inst.x[k] = -dil.x[k];
  inst.h.resize(dil.h.size());
  for (std::size_t k = 0; k < dil.h.size(); ++k) inst.h[k] = -dil.h[k];
  inst.epsilon = dil.epsilon;
  inst.binding_row = dil.binding_row;  // output index of the erosion
  inst.binding_col = dil.binding_col;  // competing input index
  return inst;
}

PlantedConvInstance planted_conv_taps(SeededSampler& s, std::size_t n, std::size_t p) {
  if (p < 2) throw std::invalid_argument("planted_conv_taps: need p >= 2");
  PlantedConvInstance inst;
  inst.blocks = s.lattice_mat(n, p, -8.0, 8.0, kWeightStep);
  inst.taps = s.lattice_vec(p, -8.0, 8.0, kWeightStep);
  inst.h = s.lattice_vec(p, -4.0, 4.0, 1.0);
  SlotTable table(inst.blocks, inst.taps);
  const PlantSpec spec =
      plant(s, table, [&](std::size_t, std::size_t j) { return inst.h[j]; },
            [&](std::size_t, std::size_t j, double v) { inst.h[j] = v; });
  inst.epsilon = spec.e;
  inst.binding_row = spec.binding_row;
  inst.binding_col = spec.binding_col;
  return inst;
}

LatticeLayerInstance lattice_dilation_instance(SeededSampler& s, std::size_t m, std::size_t n,
                                               bool force_ties) {
  LatticeLayerInstance inst;
  inst.W = s.lattice_mat(m, n, -8.0, 8.0, kWeightStep);
  inst.x = s.lattice_vec(n, -8.0, 8.0, kWeightStep);
  if (force_ties && n >= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      if (s.index(2) == 0) continue;
      const Mat vals = value_table_dilation(inst.W, inst.x);
      const Vec phi = row_maxima(vals);
      const std::size_t j2 = s.index(n);
      inst.W(i, j2) = phi[i] - inst.x[j2];
    }
  }
  return inst;
}

}  // namespace morpho::oracle
