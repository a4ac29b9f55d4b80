#include "stripeforge/signs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "stripeforge/error.hpp"

namespace stripeforge {

namespace {

using Rgb = std::array<double, 3>;

constexpr Rgb kRed{0.80, 0.08, 0.10};
constexpr Rgb kWhite{0.92, 0.92, 0.92};
constexpr Rgb kYellow{0.95, 0.78, 0.06};
constexpr Rgb kBlue{0.06, 0.24, 0.74};
constexpr Rgb kBlack{0.08, 0.08, 0.08};

constexpr std::array<std::string_view, kSignClassCount> kNames{
    "stop", "yield", "priority_road", "speed_limit_30",
    "no_entry", "keep_right", "warning", "end_of_restrictions"};

// 3x5 bitmaps, row-major from the top.
constexpr std::array<const char*, 2> kDigits{
    "111001111001111",  // 3
    "111101101101111",  // 0
};

// Signed distances: negative inside.
double sd_disc(double u, double v, double r) { return std::hypot(u, v) - r; }

double sd_octagon(double u, double v, double apothem) {
  const double au = std::abs(u);
  const double av = std::abs(v);
  return std::max({au, av, (au + av) / std::sqrt(2.0)}) - apothem;
}

double sd_diamond(double u, double v, double r) {
  return (std::abs(u) + std::abs(v)) / std::sqrt(2.0) - r / std::sqrt(2.0);
}

// Triangle with apex (0, -0.92) and base corners (+-0.97, 0.78); `down`
// mirrors it vertically.
double sd_triangle(double u, double v, bool down) {
  const double y = down ? -v : v;
  const double len = std::hypot(1.70, 0.97);
  return std::max(y - 0.78, (1.70 * std::abs(u) - 0.97 * (y + 0.92)) / len);
}

bool in_digit(std::size_t digit, double u, double v, double u0, double v0, double cell) {
  const double cu = (u - u0) / cell;
  const double cv = (v - v0) / cell;
  if (cu < 0.0 || cv < 0.0 || cu >= 3.0 || cv >= 5.0) return false;
  const auto col = static_cast<std::size_t>(cu);
  const auto row = static_cast<std::size_t>(cv);
  return kDigits[digit][row * 3 + col] == '1';
}

}  // namespace

std::string_view sign_name(std::size_t cls) {
  if (cls >= kSignClassCount) return "unknown";
  return kNames[cls];
}

std::size_t parse_sign_class(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return i;
  }
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec == std::errc() && ptr == name.data() + name.size() && idx < kSignClassCount) return idx;
  throw ConfigError("unknown sign class '" + std::string(name) + "'");
}

std::array<double, 3> sign_reflectance(std::size_t cls, double u, double v, const Rgb& background) {
  switch (static_cast<SignClass>(cls)) {
    case SignClass::stop: {
      const double d = sd_octagon(u, v, 0.94);
      if (d > 0.0) return background;
      if (d > -0.06) return kWhite;
      if (std::abs(v) < 0.15 && std::abs(u) < 0.62) return kWhite;
      return kRed;
    }
    case SignClass::yield: {
      const double d = sd_triangle(u, v, true);
      if (d > 0.0) return background;
      return d > -0.2 ? kRed : kWhite;
    }
    case SignClass::priority_road: {
      const double d = sd_diamond(u, v, 0.97);
      if (d > 0.0) return background;
      if (d > -0.16) return kWhite;
      if (d > -0.2) return kBlack;
      return kYellow;
    }
    case SignClass::speed_limit_30: {
      const double d = sd_disc(u, v, 0.95);
      if (d > 0.0) return background;
      if (d > -0.2) return kRed;
      if (in_digit(0, u, v, -0.5, -0.3, 0.12) || in_digit(1, u, v, 0.06, -0.3, 0.12)) return kBlack;
      return kWhite;
    }
    case SignClass::no_entry: {
      const double d = sd_disc(u, v, 0.95);
      if (d > 0.0) return background;
      if (std::abs(v) < 0.17 && std::abs(u) < 0.66) return kWhite;
      return kRed;
    }
    case SignClass::keep_right: {
      const double d = sd_disc(u, v, 0.95);
      if (d > 0.0) return background;
      const double across = std::abs(u - v) / std::sqrt(2.0);
      const double along = (u + v) / std::sqrt(2.0);
      if (across < 0.13 && along > -0.6 && along < 0.35) return kWhite;
      // Arrow head pointing down-right.
      if (along >= 0.35 && along < 0.65 && across < (0.65 - along) * 1.1) return kWhite;
      return kBlue;
    }
    case SignClass::warning: {
      const double d = sd_triangle(u, v, false);
      if (d > 0.0) return background;
      if (d > -0.2) return kRed;
      if (std::abs(u) < 0.07 && ((v > -0.3 && v < 0.3) || (v > 0.4 && v < 0.54))) return kBlack;
      return kWhite;
    }
    case SignClass::end_of_restrictions: {
      const double d = sd_disc(u, v, 0.95);
      if (d > 0.0) return background;
      if (d > -0.05) return kBlack;
      const double across = (u + v) / std::sqrt(2.0);
      if (std::abs(across) < 0.3 && std::fmod(std::abs(across) + 0.05, 0.2) < 0.1) return kBlack;
      return kWhite;
    }
  }
  return background;
}

Image render_sign_texture(std::size_t cls, std::size_t size, const SignPose& pose,
                          const Rgb& background, std::size_t supersample) {
  if (cls >= kSignClassCount) throw DomainError("sign class out of range");
  if (size == 0 || supersample == 0) throw DomainError("texture size must be positive");
  Image img(size, size);
  const double n = static_cast<double>(size);
  const double ss = static_cast<double>(supersample);
  const double weight = 1.0 / (ss * ss);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      Rgb acc{};
      for (std::size_t i = 0; i < supersample; ++i) {
        for (std::size_t j = 0; j < supersample; ++j) {
          const double y = (static_cast<double>(r) + (static_cast<double>(i) + 0.5) / ss) / n * 2.0 - 1.0;
          const double x = (static_cast<double>(c) + (static_cast<double>(j) + 0.5) / ss) / n * 2.0 - 1.0;
          const Rgb refl =
              sign_reflectance(cls, (x - pose.du) / pose.scale, (y - pose.dv) / pose.scale, background);
          for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] += refl[ch] * weight;
        }
      }
      for (std::size_t ch = 0; ch < 3; ++ch) img.at(r, c, ch) = acc[ch];
    }
  }
  return img;
}

Image sign_texture(std::size_t cls, std::size_t side) {
  static std::mutex mutex;
  static std::map<std::size_t, Image> masters;
  constexpr std::size_t kMasterSide = 256;
  if (side == 0) throw DomainError("texture side must be positive");
  std::lock_guard lock(mutex);
  auto it = masters.find(cls);
  if (it == masters.end()) it = masters.emplace(cls, render_sign_texture(cls, kMasterSide)).first;
  return resize_area(it->second, side, side);
}

}  // namespace stripeforge
