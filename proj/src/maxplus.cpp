#include "morpho/maxplus.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace morpho {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) fail("Mat: rows and cols must be >= 1");
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() == 0) fail("Mat::from_rows: empty row list");
  const std::size_t n = rows.begin()->size();
  Mat m(rows.size(), n);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != n) fail("Mat::from_rows: ragged rows");
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  require_finite(m, "Mat::from_rows");
  return m;
}

Mat Mat::transposed() const {
  Mat t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void require_finite(const Vec& v, const std::string& what) {
  for (double x : v)
    if (!std::isfinite(x)) fail(what + ": non-finite entry");
}

void require_finite(const Mat& m, const std::string& what) {
  require_finite(m.data(), what);
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) fail("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double frobenius_norm(const Mat& m) { return norm2(m.data()); }

Vec dilation_forward(const Mat& W, const Vec& x) {
  if (W.cols() != x.size()) fail("dilation_forward: W.cols != x.dim");
  Vec out(W.rows());
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double best = kNegInf;
    for (std::size_t k = 0; k < W.cols(); ++k) {
      const double v = x[k] + W(i, k);
      if (v > best) best = v;
    }
    out[i] = best;
  }
  return out;
}

Vec erosion_forward(const Mat& W, const Vec& y) {
  if (W.rows() != y.size()) fail("erosion_forward: W.rows != y.dim");
  Vec out(W.cols());
  for (std::size_t j = 0; j < W.cols(); ++j) {
    double best = kPosInf;
    for (std::size_t k = 0; k < W.rows(); ++k) {
      const double v = y[k] - W(k, j);
      if (v < best) best = v;
    }
    out[j] = best;
  }
  return out;
}

Mat maxplus_matmul(const Mat& A, const Mat& B) {
  if (A.cols() != B.rows()) fail("maxplus_matmul: A.cols != B.rows");
  Mat C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < B.cols(); ++j) {
      double best = kNegInf;
      for (std::size_t k = 0; k < A.cols(); ++k) {
        const double v = A(i, k) + B(k, j);
        if (v > best) best = v;
      }
      C(i, j) = best;
    }
  }
  return C;
}

Mat pointwise_max_reduce(const std::vector<Mat>& ws) {
  if (ws.empty()) fail("pointwise_max_reduce: empty list");
  Mat out = ws.front();
  for (std::size_t l = 1; l < ws.size(); ++l) {
    if (!ws[l].same_shape(out)) fail("pointwise_max_reduce: shape mismatch");
    for (std::size_t i = 0; i < out.data().size(); ++i)
      if (ws[l].data()[i] > out.data()[i]) out.data()[i] = ws[l].data()[i];
  }
  return out;
}

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::DenseDilation: return "dense_dilation";
    case LayerKind::DenseErosion: return "dense_erosion";
    case LayerKind::AntiDilation: return "anti_dilation";
    case LayerKind::AntiErosion: return "anti_erosion";
    case LayerKind::ConvDilation: return "conv_dilation";
    case LayerKind::Linear: return "linear";
    case LayerKind::Relu: return "relu";
    case LayerKind::SquaredErrorLoss: return "squared_error_loss";
  }
  fail("layer_kind_name: unknown kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "dense_dilation") return LayerKind::DenseDilation;
  if (name == "dense_erosion") return LayerKind::DenseErosion;
  if (name == "anti_dilation") return LayerKind::AntiDilation;
  if (name == "anti_erosion") return LayerKind::AntiErosion;
  if (name == "conv_dilation") return LayerKind::ConvDilation;
  if (name == "linear") return LayerKind::Linear;
  if (name == "relu") return LayerKind::Relu;
  if (name == "squared_error_loss") return LayerKind::SquaredErrorLoss;
  fail("layer_kind_from_name: unknown kind '" + name + "'");
}

Vec anti_forward(LayerKind kind, const Mat& W, const Vec& x) {
  Vec neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  if (kind == LayerKind::AntiDilation) return dilation_forward(W, neg);
  if (kind == LayerKind::AntiErosion) return erosion_forward(W, neg);
  fail("anti_forward: kind must be AntiDilation or AntiErosion");
}

Mat windows_from_signal(const Vec& signal, std::size_t width) {
  if (width == 0) fail("windows_from_signal: width must be >= 1");
  if (signal.size() < width) fail("windows_from_signal: signal shorter than window");
  const std::size_t n = signal.size() - width + 1;
  Mat blocks(n, width);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < width; ++j) blocks(i, j) = signal[i + j];
  return blocks;
}

Vec conv_dilation_forward(const Vec& taps, const Mat& blocks) {
  if (taps.empty()) fail("conv_dilation_forward: empty taps");
  if (blocks.cols() != taps.size()) fail("conv_dilation_forward: blocks.cols != taps.size");
  Vec out(blocks.rows());
  for (std::size_t i = 0; i < blocks.rows(); ++i) {
    double best = kNegInf;
    for (std::size_t j = 0; j < taps.size(); ++j) {
      const double v = blocks(i, j) + taps[j];
      if (v > best) best = v;
    }
    out[i] = best;
  }
  return out;
}

Vec linear_forward(const Mat& W, const Vec& bias, const Vec& x) {
  if (W.cols() != x.size()) fail("linear_forward: W.cols != x.dim");
  if (W.rows() != bias.size()) fail("linear_forward: W.rows != bias.dim");
  Vec out(W.rows());
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double s = bias[i];
    for (std::size_t k = 0; k < W.cols(); ++k) s += W(i, k) * x[k];
    out[i] = s;
  }
  return out;
}

Vec relu_forward(const Vec& x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

double squared_error_loss(const Vec& x, const Vec& target) {
  if (x.size() != target.size()) fail("squared_error_loss: dim mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target[i];
    s += d * d;
  }
  return s;
}

}  // namespace morpho
