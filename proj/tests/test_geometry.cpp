#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "stripeforge/camera.hpp"
#include "stripeforge/error.hpp"
#include "stripeforge/geometry.hpp"

using namespace stripeforge;

namespace {

// Projects the sign's top and bottom edge points (x = 0) through a pinhole
// at the origin and converts image heights to scanlines.
struct RayTrace {
  double top_row;
  double bottom_row;
};

RayTrace ray_trace(const CameraConfig& cam, double sign_h, double y_t, double z_t) {
  auto row_of = [&](double y_world) {
    const double y_image = cam.z_f * y_world / z_t;
    return 0.5 * static_cast<double>(cam.n_lines) - y_image * static_cast<double>(cam.n_lines) / cam.h_s;
  };
  return {row_of(y_t + 0.5 * sign_h), row_of(y_t - 0.5 * sign_h)};
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("projection of a 0.9 m sign at 20 m") {
    const CameraConfig cam = default_camera();
    const SignGeometry sign;
    const auto p = project_sign(cam, sign, {20.0, 0.0, 0.0, 0.0});
    // 0.012 * 0.9 / 20 * 1088 / 0.00326 = 180.22
    CHECK(p.n_sign == doctest::Approx(180.2).epsilon(0.1 / 180.2));
    const auto q = project_sign(cam, sign, {20.0, 0.7, 0.0, 0.0});
    // 544 - 1.15 * 0.012 * 1088 / (20 * 0.00326) = 313.72
    CHECK(q.n_up == doctest::Approx(313.7).epsilon(0.1 / 313.7));
    CHECK(q.visibility == Visibility::full);
  }

  TEST_CASE("doubling the distance halves the sign height") {
    const CameraConfig cam = default_camera();
    for (double z : {5.0, 12.5, 31.0}) {
      const auto a = project_sign(cam, {}, {z, 0.7, 0.0, 0.0});
      const auto b = project_sign(cam, {}, {2.0 * z, 0.7, 0.0, 0.0});
      CHECK(b.n_sign == doctest::Approx(0.5 * a.n_sign).epsilon(1e-14));
    }
  }

  TEST_CASE("projection agrees with a ray-traced pinhole") {
    const CameraConfig cam = default_camera();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> z(5.0, 60.0);
    std::uniform_real_distribution<double> y(-1.0, 2.0);
    std::uniform_real_distribution<double> h(0.3, 1.5);
    for (int i = 0; i < 1000; ++i) {
      const SignGeometry sign{h(rng), 2.0};
      const double zt = z(rng);
      const double yt = y(rng);
      const auto p = project_sign(cam, sign, {zt, yt, 0.0, 0.0});
      const auto o = ray_trace(cam, sign.h_sign, yt, zt);
      CHECK(std::abs(p.n_up - o.top_row) <= 0.5);
      CHECK(std::abs(p.n_up + p.n_sign - o.bottom_row) <= 0.5);
    }
  }

  TEST_CASE("pitch enters as an altitude shift") {
    CameraConfig cam = default_camera();
    cam.pitch_deg = 2.0;
    const double z = 15.0;
    const auto p = project_sign(cam, {}, {z, 0.7, 0.0, 0.0});
    cam.pitch_deg = 0.0;
    const double shifted = 0.7 - z * std::tan(2.0 * 3.14159265358979323846 / 180.0);
    const auto q = project_sign(cam, {}, {z, shifted, 0.0, 0.0});
    CHECK(p.n_up == doctest::Approx(q.n_up));
  }

  TEST_CASE("visibility classification") {
    const CameraConfig cam = default_camera();
    for (double z = 10.0; z <= 32.0; z += 0.5) {
      const auto p = project_sign(cam, {}, {z, 0.7, 0.0, 0.0});
      CHECK(p.visibility == Visibility::full);
      CHECK(p.n_up + p.n_sign <= static_cast<double>(cam.n_lines));
    }
    CHECK(project_sign(cam, {}, {0.5, 0.7, 0.0, 0.0}).visibility == Visibility::none);
    CHECK(project_sign(cam, {}, {2.5, 0.7, 0.0, 0.0}).visibility == Visibility::partial);
    CHECK_THROWS_AS(project_sign(cam, {}, {0.0, 0.7, 0.0, 0.0}), DomainError);
  }

  TEST_CASE("tracker sums range and offsets") {
    TrackerConfig cfg;
    cfg.range_noise_sd = 0.0;
    const auto e = tracker_estimate(cfg, {}, 10.0, 1u);
    CHECK(e.z_t == doctest::Approx(16.5));
    CHECK(e.y_t == doctest::Approx(0.7));
    CHECK_THROWS_AS(tracker_estimate(cfg, {}, -1.0, 1u), DomainError);
  }

  TEST_CASE("tracker noise is unbiased") {
    TrackerConfig cfg;
    cfg.range_noise_sd = 0.05;
    std::mt19937_64 rng(77);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += tracker_estimate(cfg, {}, 10.0, rng).z_t;
    CHECK(std::abs(sum / n - 16.5) <= 3.0 * 0.05 / 100.0);
    CHECK(tracker_estimate(cfg, {}, 10.0, 3u).z_t == tracker_estimate(cfg, {}, 10.0, 3u).z_t);
  }

  TEST_CASE("range noise keeps the scanline error under 20 rows") {
    const CameraConfig cam = default_camera();
    TrackerConfig cfg;
    std::mt19937_64 rng(19);
    double worst = 0.0;
    for (double z = 10.0; z <= 32.0; z += 1.0) {
      const auto truth = project_sign(cam, {}, {z, 0.7, 0.0, 0.0});
      for (int i = 0; i < 1000; ++i) {
        const auto e = tracker_estimate(cfg, {}, z - cfg.d1 - cfg.d2, rng);
        const auto est = project_sign(cam, {}, {e.z_t, e.y_t, 0.0, 0.0});
        worst = std::max({worst, std::abs(est.n_up - truth.n_up), std::abs(est.n_sign - truth.n_sign)});
      }
    }
    CHECK(worst < 20.0);
  }

  TEST_CASE("drive-by trajectory") {
    const CameraConfig cam = default_camera();
    const auto states = simulate_trajectory(32.0, 10.0, 10.0 / 3.6, cam, 0.7);
    CHECK(states.size() == 238);
    for (std::size_t i = 1; i < states.size(); ++i) {
      CHECK(states[i].z_t < states[i - 1].z_t);
      CHECK(states[i].t == doctest::Approx(static_cast<double>(i) / 30.0));
    }
    CHECK(states.back().z_t >= 10.0);
    const auto two = simulate_trajectory(32.0, 10.0, 22.0 * 30.0, cam);
    CHECK(two.size() == 2);
    CHECK_THROWS_AS(simulate_trajectory(10.0, 32.0, 1.0, cam), DomainError);
    CHECK_THROWS_AS(simulate_trajectory(32.0, 10.0, 0.0, cam), DomainError);
  }

  TEST_CASE("round half up") {
    CHECK(round_half_up(2.5) == 3);
    CHECK(round_half_up(2.49) == 2);
    CHECK(round_half_up(-2.5) == -2);
  }
}
