#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "stripeforge/image.hpp"

namespace stripeforge {

/// Synthetic traffic-sign archetypes used by the surrogate classifier.
enum class SignClass : std::size_t {
  stop = 0,
  yield,
  priority_road,
  speed_limit_30,
  no_entry,
  keep_right,
  warning,
  end_of_restrictions,
};

inline constexpr std::size_t kSignClassCount = 8;

std::string_view sign_name(std::size_t cls);
/// Class index for a name or a decimal index string; throws ConfigError.
std::size_t parse_sign_class(std::string_view name);

/// Placement of the sign inside the rendered square: `scale` shrinks the
/// sign about the centre, (du, dv) shift it in units of half the image.
struct SignPose {
  double scale = 1.0;
  double du = 0.0;
  double dv = 0.0;
};

/// Reflectance of sign class `cls` at normalised coordinates (u, v) in
/// [-1, 1]^2, v pointing down. Points off the sign take `background`.
std::array<double, 3> sign_reflectance(std::size_t cls, double u, double v,
                                       const std::array<double, 3>& background);

/// Rasterises the sign into a size x size reflectance texture with
/// `supersample`^2 samples per pixel.
Image render_sign_texture(std::size_t cls, std::size_t size, const SignPose& pose = {},
                          const std::array<double, 3>& background = {0.35, 0.42, 0.38},
                          std::size_t supersample = 3);

/// Centred sign with the default background at an arbitrary side length:
/// a cached 256 px master texture area-resampled to side x side.
Image sign_texture(std::size_t cls, std::size_t side);

}  // namespace stripeforge
