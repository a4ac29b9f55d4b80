#include "stripeforge/camera.hpp"

#include <string>

#include "stripeforge/error.hpp"

namespace stripeforge {

void CameraConfig::validate() const {
  if (!(t_ro > 0.0)) throw ConfigError("t_ro must be positive");
  if (!(t_exp > 0.0)) throw ConfigError("t_exp must be positive");
  if (n_lines < 1) throw ConfigError("n_lines must be at least 1");
  if (n_cols < 1) throw ConfigError("n_cols must be at least 1");
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
  if (!(z_f > 0.0) || !(h_s > 0.0)) throw ConfigError("focal length and sensor height must be positive");
  // A relative slack absorbs the rounding in 1/frame_rate.
  if (t_cap() > t_frame() * (1.0 + 1e-12)) {
    throw ConfigError("capture time " + std::to_string(t_cap() * 1e3) + " ms exceeds frame period " +
                      std::to_string(t_frame() * 1e3) + " ms");
  }
}

CameraConfig default_camera() { return CameraConfig{}; }

}  // namespace stripeforge
