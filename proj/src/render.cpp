#include "stripeforge/render.hpp"

#include <algorithm>
#include <cmath>

#include "stripeforge/error.hpp"

namespace stripeforge {

RadiometricScene RadiometricScene::from_images(Image amb, Image full) {
  if (!amb.same_shape(full)) throw ConfigError("ambient and full images differ in shape");
  Image att(amb.rows(), amb.cols());
  const auto a = amb.data();
  const auto f = full.data();
  auto d = att.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0 || f[i] > 1.0) throw ConfigError("scene values outside [0, 1]");
    if (f[i] < a[i]) throw ConfigError("full-LED image darker than ambient image");
    d[i] = f[i] - a[i];
  }
  return {std::move(amb), std::move(full), std::move(att), std::nullopt};
}

RadiometricScene RadiometricScene::from_texture(const Image& texture, const SceneParams& p) {
  Image amb(texture.rows(), texture.cols());
  Image full(texture.rows(), texture.cols());
  for (std::size_t r = 0; r < texture.rows(); ++r) {
    for (std::size_t c = 0; c < texture.cols(); ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double tex = texture.at(r, c, ch);
        amb.at(r, c, ch) = std::clamp(p.rho_texp * tex * p.alpha[ch], 0.0, 1.0);
        full.at(r, c, ch) = std::clamp(p.rho_texp * tex * (p.alpha[ch] + p.beta[ch]), 0.0, 1.0);
      }
    }
  }
  auto scene = from_images(std::move(amb), std::move(full));
  scene.params = p;
  return scene;
}

RadiometricScene RadiometricScene::crop(std::size_t row0, std::size_t col0, std::size_t n,
                                        std::size_t m) const {
  return {amb.crop(row0, col0, n, m), full.crop(row0, col0, n, m), att.crop(row0, col0, n, m),
          params};
}

RadiometricScene RadiometricScene::attenuated(double factor) const {
  RadiometricScene out = *this;
  auto a = out.amb.data();
  auto t = out.att.data();
  auto f = out.full.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] *= factor;
    f[i] = a[i] + t[i];
  }
  return out;
}

Rgb exposure_gain(const FlickerSignal& signal, double start, double t_exp) {
  Rgb acc{};
  double covered = 0.0;
  signal.for_each_overlap(start, start + t_exp, [&](std::size_t k, double ov) {
    covered += ov;
    for (std::size_t c = 0; c < 3; ++c) acc[c] += signal.value(c, k) * ov;
  });
  // Normalising by the summed overlaps keeps constant waveforms exact; the
  // nominal exposure is used when part of it falls outside the waveform.
  const double den = std::abs(covered - t_exp) <= 1e-9 * t_exp ? covered : t_exp;
  Rgb g{};
  for (std::size_t c = 0; c < 3; ++c) g[c] = std::clamp(acc[c] / den, 0.0, 1.0);
  return g;
}

Rgb scanline_gain(const FlickerSignal& signal, const CameraConfig& cam, std::size_t v,
                  double t_offset) {
  if (v >= cam.n_lines) throw DomainError("scanline index outside the frame");
  return exposure_gain(signal, t_offset + static_cast<double>(v) * cam.t_ro, cam.t_exp);
}

std::vector<Rgb> row_gains(const FlickerSignal& signal, const CameraConfig& cam, double first_row,
                           std::size_t count) {
  std::vector<Rgb> gains(count);
  for (std::size_t v = 0; v < count; ++v) {
    gains[v] = exposure_gain(signal, (first_row + static_cast<double>(v)) * cam.t_ro, cam.t_exp);
  }
  return gains;
}

Image compose(const RadiometricScene& scene, const std::vector<Rgb>& gains) {
  if (gains.size() != scene.rows()) throw ConfigError("gain profile does not match scene height");
  Image out(scene.rows(), scene.cols());
  for (std::size_t r = 0; r < scene.rows(); ++r) {
    const Rgb& g = gains[r];
    for (std::size_t c = 0; c < scene.cols(); ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out.at(r, c, ch) =
            std::clamp(std::lerp(scene.amb.at(r, c, ch), scene.full.at(r, c, ch), g[ch]), 0.0, 1.0);
      }
    }
  }
  return out;
}

Image render_frame(const RadiometricScene& scene, const CameraConfig& cam,
                   const FlickerSignal& signal, double phi) {
  if (scene.rows() != cam.n_lines || scene.cols() != cam.n_cols) {
    throw ConfigError("scene resolution does not match the camera");
  }
  return compose(scene, row_gains(signal, cam, phi, scene.rows()));
}

Image render_crop(const RadiometricScene& scene_crop, const CameraConfig& cam,
                  const FlickerSignal& signal, std::size_t top_row, double phi) {
  if (top_row >= cam.n_lines || scene_crop.rows() > cam.n_lines - top_row) {
    throw DomainError("crop exceeds the frame");
  }
  return compose(scene_crop,
                 row_gains(signal, cam, static_cast<double>(top_row) + phi, scene_crop.rows()));
}

}  // namespace stripeforge
