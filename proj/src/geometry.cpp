#include "stripeforge/geometry.hpp"

#include <cmath>
#include <numbers>

#include "stripeforge/error.hpp"

namespace stripeforge {

SignProjection project_sign(const CameraConfig& cam, const SignGeometry& sign,
                            const TrajectoryState& state) {
  if (!(state.z_t > 0.0)) throw DomainError("sign must be in front of the camera (z_t > 0)");
  if (!(sign.h_sign > 0.0)) throw DomainError("sign height must be positive");
  const double rows = static_cast<double>(cam.n_lines);
  const double rows_per_metre = rows / cam.h_s;
  const double y_t = state.y_t - state.z_t * std::tan(cam.pitch_deg * std::numbers::pi / 180.0);

  SignProjection p;
  p.n_sign = cam.z_f * (sign.h_sign / state.z_t) * rows_per_metre;
  p.n_up = 0.5 * rows - (y_t + 0.5 * sign.h_sign) * cam.z_f * rows_per_metre / state.z_t;
  const double bottom = p.n_up + p.n_sign;
  if (p.n_up >= 0.0 && bottom <= rows) {
    p.visibility = Visibility::full;
  } else if (bottom <= 0.0 || p.n_up >= rows) {
    p.visibility = Visibility::none;
  } else {
    p.visibility = Visibility::partial;
  }
  return p;
}

TrackerEstimate tracker_estimate(const TrackerConfig& cfg, const SignGeometry& sign, double d_est,
                                 std::mt19937_64& rng) {
  if (d_est < 0.0) throw DomainError("range reading must be non-negative");
  double noise = 0.0;
  if (cfg.range_noise_sd > 0.0) {
    noise = std::normal_distribution<double>(0.0, cfg.range_noise_sd)(rng);
  }
  return {d_est + noise + cfg.d1 + cfg.d2, sign.y_sign - cfg.y_cam};
}

TrackerEstimate tracker_estimate(const TrackerConfig& cfg, const SignGeometry& sign, double d_est,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return tracker_estimate(cfg, sign, d_est, rng);
}

std::vector<TrajectoryState> simulate_trajectory(double start_z, double end_z, double speed,
                                                 const CameraConfig& cam, double y_t) {
  if (!(start_z > end_z && end_z > 0.0)) throw DomainError("trajectory needs start_z > end_z > 0");
  if (!(speed > 0.0)) throw DomainError("speed must be positive");
  const double step = speed * cam.t_frame();
  // The epsilon keeps an exact multiple of the step from losing its endpoint.
  const auto count = static_cast<std::size_t>(std::floor((start_z - end_z) / step + 1e-9)) + 1;
  std::vector<TrajectoryState> states;
  states.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double t = static_cast<double>(n) * cam.t_frame();
    states.push_back({start_z - static_cast<double>(n) * step, y_t, speed, t});
  }
  return states;
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace stripeforge
