#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stripeforge/camera.hpp"

namespace stripeforge {

struct SignGeometry {
  double h_sign = 0.9;  ///< vertical size, m
  double y_sign = 2.0;  ///< altitude of the sign centre, m
};

/// Roadside rangefinder: the sign-to-camera distance is the measured range
/// plus the sign-to-tracker (d1) and camera-to-bumper (d2) offsets.
struct TrackerConfig {
  double d1 = 5.0;
  double d2 = 1.5;
  double y_cam = 1.3;
  double range_noise_sd = 0.1;
};

struct TrajectoryState {
  double z_t = 0.0;    ///< horizontal sign-to-camera distance, m
  double y_t = 0.0;    ///< sign altitude above the camera, m
  double speed = 0.0;  ///< m/s
  double t = 0.0;      ///< seconds since scenario start
};

enum class Visibility { full, partial, none };

/// Vertical image-plane extent of the sign in scanlines. n_up is the
/// continuous coordinate of the top edge (0 = top of the sensor).
struct SignProjection {
  double n_up = 0.0;
  double n_sign = 0.0;
  Visibility visibility = Visibility::none;
};

/// Pinhole projection of the sign's vertical extent. Camera pitch tilts the
/// optical axis upward and enters as y_t - z_t*tan(pitch).
SignProjection project_sign(const CameraConfig& cam, const SignGeometry& sign,
                            const TrajectoryState& state);

struct TrackerEstimate {
  double z_t;
  double y_t;
};

TrackerEstimate tracker_estimate(const TrackerConfig& cfg, const SignGeometry& sign, double d_est,
                                 std::mt19937_64& rng);
TrackerEstimate tracker_estimate(const TrackerConfig& cfg, const SignGeometry& sign, double d_est,
                                 std::uint64_t seed);

/// One state per frame period from start_z down to (not below) end_z.
std::vector<TrajectoryState> simulate_trajectory(double start_z, double end_z, double speed,
                                                 const CameraConfig& cam, double y_t = 0.0);

/// Rounds halves towards +infinity.
long round_half_up(double x);

}  // namespace stripeforge
