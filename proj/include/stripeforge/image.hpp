#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace stripeforge {

/// Interleaved RGB image of doubles, row-major, row 0 at the top.
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return px_.size(); }
  bool empty() const { return px_.empty(); }

  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return px_[(r * cols_ + c) * kChannels + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return px_[(r * cols_ + c) * kChannels + ch];
  }

  std::span<double> data() { return px_; }
  std::span<const double> data() const { return px_; }

  bool same_shape(const Image& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  /// Copy of rows [row0, row0+n) and columns [col0, col0+m).
  Image crop(std::size_t row0, std::size_t col0, std::size_t n, std::size_t m) const;

  void clamp_unit();

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> px_;
};

/// Sparse 1-D resampling operator: output sample i is sum_j w_ij * input[j].
struct AxisWeights {
  std::vector<std::vector<std::pair<std::size_t, double>>> taps;

  /// Bilinear weights with half-pixel centres (align_corners = false):
  /// src = (dst + 0.5) * in/out - 0.5, clamped to the valid range.
  static AxisWeights bilinear(std::size_t in, std::size_t out);
  /// Exact box-filter (area) weights; rows sum to one.
  static AxisWeights area(std::size_t in, std::size_t out);
};

/// Separable linear resampler with its adjoint (for backpropagation).
class Resampler {
 public:
  Resampler(AxisWeights rows, AxisWeights cols, std::size_t in_rows, std::size_t in_cols);

  static Resampler bilinear(std::size_t in_rows, std::size_t in_cols, std::size_t out_rows,
                            std::size_t out_cols);
  static Resampler area(std::size_t in_rows, std::size_t in_cols, std::size_t out_rows,
                        std::size_t out_cols);

  std::size_t in_rows() const { return in_rows_; }
  std::size_t in_cols() const { return in_cols_; }
  std::size_t out_rows() const { return rows_.taps.size(); }
  std::size_t out_cols() const { return cols_.taps.size(); }

  Image apply(const Image& in) const;
  /// Transpose of apply(): maps a gradient on the output onto the input grid.
  Image adjoint(const Image& grad_out) const;

 private:
  AxisWeights rows_;
  AxisWeights cols_;
  std::size_t in_rows_;
  std::size_t in_cols_;
};

Image resize_bilinear(const Image& in, std::size_t rows, std::size_t cols);
Image resize_area(const Image& in, std::size_t rows, std::size_t cols);

}  // namespace stripeforge
