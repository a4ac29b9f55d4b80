#pragma once

#include <cstddef>

namespace stripeforge {

/// Rolling-shutter sensor and optics parameters. All times in seconds,
/// lengths in metres.
struct CameraConfig {
  double t_ro = 30e-6;       ///< per-scanline readout time
  double t_exp = 0.5e-3;     ///< per-scanline exposure
  std::size_t n_lines = 1088;
  std::size_t n_cols = 1928;
  double frame_rate = 30.0;
  double z_f = 12e-3;        ///< focal length
  double h_s = 3.26e-3;      ///< sensor height
  double pitch_deg = 0.0;

  double t_frame() const { return 1.0 / frame_rate; }
  /// Time to expose and read out the whole frame.
  double t_cap() const { return static_cast<double>(n_lines) * t_ro + t_exp; }
  /// Per-frame drift of a back-to-back replay of a t_cap-long signal.
  double drift() const { return t_frame() - t_cap(); }

  /// Throws ConfigError unless t_ro, t_exp > 0, n_lines >= 1 and t_cap <= t_frame.
  void validate() const;
};

/// AR023Z-class sensor behind a 12 mm lens with a 0.5 ms exposure.
CameraConfig default_camera();

}  // namespace stripeforge
