#include "stripeforge/image.hpp"

#include <algorithm>
#include <cmath>

#include "stripeforge/error.hpp"

namespace stripeforge {

Image::Image(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), px_(rows * cols * kChannels, fill) {}

Image Image::crop(std::size_t row0, std::size_t col0, std::size_t n, std::size_t m) const {
  if (row0 + n > rows_ || col0 + m > cols_) {
    throw DomainError("crop exceeds image bounds");
  }
  Image out(n, m);
  for (std::size_t r = 0; r < n; ++r) {
    const auto* src = &px_[((row0 + r) * cols_ + col0) * kChannels];
    std::copy(src, src + m * kChannels, &out.px_[r * m * kChannels]);
  }
  return out;
}

void Image::clamp_unit() {
  for (auto& v : px_) v = std::clamp(v, 0.0, 1.0);
}

AxisWeights AxisWeights::bilinear(std::size_t in, std::size_t out) {
  AxisWeights w;
  w.taps.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(src));
    const std::size_t hi = std::min(lo + 1, in - 1);
    const double frac = src - static_cast<double>(lo);
    if (hi == lo || frac == 0.0) {
      w.taps[i] = {{lo, 1.0}};
    } else {
      w.taps[i] = {{lo, 1.0 - frac}, {hi, frac}};
    }
  }
  return w;
}

AxisWeights AxisWeights::area(std::size_t in, std::size_t out) {
  AxisWeights w;
  w.taps.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double a = static_cast<double>(i) * scale;
    const double b = static_cast<double>(i + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(a));
    const auto last = std::min(in, static_cast<std::size_t>(std::ceil(b)));
    for (std::size_t j = first; j < last; ++j) {
      const double overlap =
          std::min(b, static_cast<double>(j + 1)) - std::max(a, static_cast<double>(j));
      if (overlap > 0.0) w.taps[i].emplace_back(j, overlap / scale);
    }
  }
  return w;
}

Resampler::Resampler(AxisWeights rows, AxisWeights cols, std::size_t in_rows,
                     std::size_t in_cols)
    : rows_(std::move(rows)), cols_(std::move(cols)), in_rows_(in_rows), in_cols_(in_cols) {}

Resampler Resampler::bilinear(std::size_t in_rows, std::size_t in_cols, std::size_t out_rows,
                              std::size_t out_cols) {
  if (in_rows == 0 || in_cols == 0 || out_rows == 0 || out_cols == 0) {
    throw DomainError("resize of an empty image");
  }
  return {AxisWeights::bilinear(in_rows, out_rows), AxisWeights::bilinear(in_cols, out_cols),
          in_rows, in_cols};
}

Resampler Resampler::area(std::size_t in_rows, std::size_t in_cols, std::size_t out_rows,
                          std::size_t out_cols) {
  if (in_rows == 0 || in_cols == 0 || out_rows == 0 || out_cols == 0) {
    throw DomainError("resize of an empty image");
  }
  return {AxisWeights::area(in_rows, out_rows), AxisWeights::area(in_cols, out_cols), in_rows,
          in_cols};
}

Image Resampler::apply(const Image& in) const {
  if (in.rows() != in_rows_ || in.cols() != in_cols_) {
    throw ConfigError("resampler input shape mismatch");
  }
  // Columns first into a temporary of shape in_rows x out_cols.
  Image tmp(in_rows_, out_cols());
  for (std::size_t r = 0; r < in_rows_; ++r) {
    for (std::size_t c = 0; c < out_cols(); ++c) {
      for (const auto& [j, w] : cols_.taps[c]) {
        for (std::size_t ch = 0; ch < Image::kChannels; ++ch) tmp.at(r, c, ch) += w * in.at(r, j, ch);
      }
    }
  }
  Image out(out_rows(), out_cols());
  for (std::size_t r = 0; r < out_rows(); ++r) {
    for (const auto& [i, w] : rows_.taps[r]) {
      for (std::size_t c = 0; c < out_cols(); ++c) {
        for (std::size_t ch = 0; ch < Image::kChannels; ++ch) out.at(r, c, ch) += w * tmp.at(i, c, ch);
      }
    }
  }
  return out;
}

Image Resampler::adjoint(const Image& grad_out) const {
  if (grad_out.rows() != out_rows() || grad_out.cols() != out_cols()) {
    throw ConfigError("resampler gradient shape mismatch");
  }
  Image tmp(in_rows_, out_cols());
  for (std::size_t r = 0; r < out_rows(); ++r) {
    for (const auto& [i, w] : rows_.taps[r]) {
      for (std::size_t c = 0; c < out_cols(); ++c) {
        for (std::size_t ch = 0; ch < Image::kChannels; ++ch) tmp.at(i, c, ch) += w * grad_out.at(r, c, ch);
      }
    }
  }
  Image in(in_rows_, in_cols_);
  for (std::size_t r = 0; r < in_rows_; ++r) {
    for (std::size_t c = 0; c < out_cols(); ++c) {
      for (const auto& [j, w] : cols_.taps[c]) {
        for (std::size_t ch = 0; ch < Image::kChannels; ++ch) in.at(r, j, ch) += w * tmp.at(r, c, ch);
      }
    }
  }
  return in;
}

Image resize_bilinear(const Image& in, std::size_t rows, std::size_t cols) {
  if (in.rows() == rows && in.cols() == cols) return in;
  return Resampler::bilinear(in.rows(), in.cols(), rows, cols).apply(in);
}

Image resize_area(const Image& in, std::size_t rows, std::size_t cols) {
  if (in.rows() == rows && in.cols() == cols) return in;
  return Resampler::area(in.rows(), in.cols(), rows, cols).apply(in);
}

}  // namespace stripeforge
