// Max-plus / min-plus primitives: dense dilation and erosion layers, the
// max-plus matrix product, pointwise reductions, 1-D sliding-window dilation
// and the classical layers (linear, relu, squared-error loss) they compose with.
#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace morpho {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  bool same_shape(const Mat& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Mat& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

  Mat transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Vec& v, const std::string& what);
void require_finite(const Mat& m, const std::string& what);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
double frobenius_norm(const Mat& m);

// out_i = max_k (x_k + w_{ik}); requires W.cols == x.size.
Vec dilation_forward(const Mat& W, const Vec& x);

// out_j = min_k (y_k - w_{kj}); requires W.rows == y.size. Together with
// dilation_forward this forms an adjunction: dil(x) <= y  <=>  x <= ero(y).
Vec erosion_forward(const Mat& W, const Vec& y);

// C_{ij} = max_k (A_{ik} + B_{kj}); composition identity
// dilation(A, dilation(B, x)) == dilation(maxplus_matmul(A, B), x).
Mat maxplus_matmul(const Mat& A, const Mat& B);

// Entrywise maximum of a non-empty list of same-shape matrices. The dilation
// by the result equals the componentwise max of the individual dilations.
Mat pointwise_max_reduce(const std::vector<Mat>& ws);

enum class LayerKind {
  DenseDilation,
  DenseErosion,
  AntiDilation,
  AntiErosion,
  ConvDilation,
  Linear,
  Relu,
  SquaredErrorLoss,
};

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// AntiDilation: x -> dilation(W, -x); AntiErosion: x -> erosion(W, -x).
// Any other kind is rejected.
Vec anti_forward(LayerKind kind, const Mat& W, const Vec& x);

// Valid sliding windows: row i = signal[i .. i+width-1], n = len - width + 1.
Mat windows_from_signal(const Vec& signal, std::size_t width);

// out_i = max_j (blocks_{ij} + taps_j); requires blocks.cols == taps.size.
Vec conv_dilation_forward(const Vec& taps, const Mat& blocks);

Vec linear_forward(const Mat& W, const Vec& bias, const Vec& x);
Vec relu_forward(const Vec& x);
double squared_error_loss(const Vec& x, const Vec& target);

}  // namespace morpho
