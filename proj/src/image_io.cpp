#include "stripeforge/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "stripeforge/error.hpp"

namespace stripeforge {

namespace {

constexpr std::array<char, 8> kSceneMagic{'R', 'S', 'E', 'I', 'M', 'G', '1', '\0'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> b{static_cast<unsigned char>(v & 0xff),
                                       static_cast<unsigned char>((v >> 8) & 0xff),
                                       static_cast<unsigned char>((v >> 16) & 0xff),
                                       static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  if (!is) throw ConfigError("truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_plane(std::ostream& os, const Image& img) {
  std::vector<char> bytes(img.size());
  const auto px = img.data();
  std::transform(px.begin(), px.end(), bytes.begin(),
                 [](double v) { return static_cast<char>(to_byte(v)); });
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_plane(std::istream& is, std::size_t rows, std::size_t cols) {
  Image img(rows, cols);
  std::vector<char> bytes(img.size());
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw ConfigError("truncated image payload");
  auto px = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) px[i] = from_byte(static_cast<std::uint8_t>(bytes[i]));
  return img;
}

// Skips whitespace and '#' comments between PPM header tokens.
std::size_t read_ppm_token(std::istream& is) {
  int ch = is.peek();
  while (ch != EOF) {
    if (ch == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(ch)) {
      is.get();
    } else {
      break;
    }
    ch = is.peek();
  }
  std::size_t v = 0;
  if (!(is >> v)) throw ConfigError("malformed PPM header");
  return v;
}

}  // namespace

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

double from_byte(std::uint8_t b) { return static_cast<double>(b) / 255.0; }

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << "P6\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  write_plane(os, img);
  if (!os) throw ConfigError("failed writing " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  if (magic != "P6") throw ConfigError(path.string() + ": not a binary PPM (P6)");
  const std::size_t cols = read_ppm_token(is);
  const std::size_t rows = read_ppm_token(is);
  const std::size_t maxval = read_ppm_token(is);
  if (maxval != 255) throw ConfigError(path.string() + ": only 8-bit PPM is supported");
  is.get();  // single whitespace before the raster
  return read_plane(is, rows, cols);
}

void write_scene_ppm(const std::filesystem::path& stem, const RadiometricScene& scene) {
  write_ppm(stem.string() + "_amb.ppm", scene.amb);
  write_ppm(stem.string() + "_full.ppm", scene.full);
  write_ppm(stem.string() + "_att.ppm", scene.att);
}

RadiometricScene read_scene_ppm(const std::filesystem::path& stem) {
  return RadiometricScene::from_images(read_ppm(stem.string() + "_amb.ppm"),
                                       read_ppm(stem.string() + "_full.ppm"));
}

void write_scene_bin(const std::filesystem::path& path, const RadiometricScene& scene) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os.write(kSceneMagic.data(), kSceneMagic.size());
  put_u32(os, static_cast<std::uint32_t>(scene.rows()));
  put_u32(os, static_cast<std::uint32_t>(scene.cols()));
  write_plane(os, scene.amb);
  write_plane(os, scene.full);
  write_plane(os, scene.att);
  if (!os) throw ConfigError("failed writing " + path.string());
}

RadiometricScene read_scene_bin(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kSceneMagic) throw ConfigError(path.string() + ": bad RSEIMG1 magic");
  const std::size_t rows = get_u32(is);
  const std::size_t cols = get_u32(is);
  Image amb = read_plane(is, rows, cols);
  Image full = read_plane(is, rows, cols);
  Image att = read_plane(is, rows, cols);
  auto scene = RadiometricScene::from_images(std::move(amb), std::move(full));
  // Quantising amb and full separately can move full - amb by one level.
  const auto stored = att.data();
  const auto derived = scene.att.data();
  for (std::size_t i = 0; i < stored.size(); ++i) {
    if (std::abs(int{to_byte(stored[i])} - int{to_byte(derived[i])}) > 1) {
      throw ConfigError(path.string() + ": att plane is not full - amb");
    }
  }
  return scene;
}

}  // namespace stripeforge
