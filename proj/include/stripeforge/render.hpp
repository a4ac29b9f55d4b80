#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "stripeforge/camera.hpp"
#include "stripeforge/image.hpp"
#include "stripeforge/signal.hpp"

namespace stripeforge {

using Rgb = std::array<double, 3>;

/// Parameters a scene was synthesised from. rho_texp folds sensor gain and
/// exposure into one scale.
struct SceneParams {
  Rgb alpha{};  ///< ambient intensity per channel
  Rgb beta{};   ///< LED maximum intensity per channel
  double rho_texp = 1.0;
};

/// Ambient-only, full-LED and attack-only images of the same view.
/// Invariant: att == full - amb and all three lie in [0, 1].
struct RadiometricScene {
  Image amb;
  Image full;
  Image att;
  std::optional<SceneParams> params;

  std::size_t rows() const { return amb.rows(); }
  std::size_t cols() const { return amb.cols(); }

  /// Throws ConfigError on shape mismatch or full < amb anywhere.
  static RadiometricScene from_images(Image amb, Image full);
  /// amb = rho*texture*alpha, full = rho*texture*(alpha+beta), clamped.
  static RadiometricScene from_texture(const Image& texture, const SceneParams& params);

  RadiometricScene crop(std::size_t row0, std::size_t col0, std::size_t n, std::size_t m) const;
  /// Multiplies the attack component by `factor` (distance attenuation).
  RadiometricScene attenuated(double factor) const;
};

/// Mean LED intensity seen by an exposure that starts at `start` (seconds,
/// in the signal's time base) and lasts t_exp.
Rgb exposure_gain(const FlickerSignal& signal, double start, double t_exp);

/// g(v): gain of scanline v whose exposure begins at t_offset + v*t_ro.
Rgb scanline_gain(const FlickerSignal& signal, const CameraConfig& cam, std::size_t v,
                  double t_offset = 0.0);

/// Gains for `count` consecutive rows, the first at real scanline position
/// `first_row` (fractional positions shift the exposure start linearly).
std::vector<Rgb> row_gains(const FlickerSignal& signal, const CameraConfig& cam, double first_row,
                           std::size_t count);

/// amb + att * gain(row), clamped to [0, 1].
Image compose(const RadiometricScene& scene, const std::vector<Rgb>& gains);

/// Full-frame render; scene must be n_lines x n_cols.
Image render_frame(const RadiometricScene& scene, const CameraConfig& cam,
                   const FlickerSignal& signal, double phi = 0.0);

/// Renders a crop whose top row is absolute scanline `top_row` (0-based);
/// crop row v uses the gain of scanline top_row + v + phi.
Image render_crop(const RadiometricScene& scene_crop, const CameraConfig& cam,
                  const FlickerSignal& signal, std::size_t top_row, double phi = 0.0);

}  // namespace stripeforge
