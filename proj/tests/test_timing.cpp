#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "stripeforge/camera.hpp"
#include "stripeforge/error.hpp"
#include "stripeforge/render.hpp"
#include "stripeforge/timing.hpp"

using namespace stripeforge;

namespace {

FlickerSignal random_signal(std::size_t n, double dt, std::uint64_t seed, double lo = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, 1.0);
  FlickerSignal::Channels ch;
  for (auto& c : ch) {
    c.resize(n);
    for (auto& v : c) v = u(rng);
  }
  return FlickerSignal(std::move(ch), dt);
}

// Narrow pulse at samples [at, at + width) of an otherwise dark waveform.
FlickerSignal pulse(std::size_t n, std::size_t at, std::size_t width, double dt) {
  FlickerSignal::Channels ch;
  for (auto& c : ch) {
    c.assign(n, 0.0);
    std::fill(c.begin() + static_cast<long>(at), c.begin() + static_cast<long>(at + width), 1.0);
  }
  return FlickerSignal(std::move(ch), dt);
}

double centroid(const std::vector<Rgb>& gains) {
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t v = 0; v < gains.size(); ++v) {
    m0 += gains[v][0];
    m1 += static_cast<double>(v) * gains[v][0];
  }
  return m1 / m0;
}

// Exposure-centre times where the channel-c gain profile crosses 0.5.
std::vector<double> half_crossings(const std::vector<Rgb>& g, const CameraConfig& cam, std::size_t c) {
  std::vector<double> out;
  for (std::size_t v = 1; v < g.size(); ++v) {
    const double a = g[v - 1][c] - 0.5;
    const double b = g[v][c] - 0.5;
    if ((a < 0.0) != (b < 0.0)) {
      const double row = static_cast<double>(v - 1) + a / (a - b);
      out.push_back(row * cam.t_ro + 0.5 * cam.t_exp);
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("timing") {
  TEST_CASE("window example") {
    const CameraConfig cam = default_camera();
    const auto s = compute_windows(400, 180, cam);
    CHECK(s.t_delay == doctest::Approx(11.97e-3).epsilon(1e-9));
    CHECK(s.t_att == doctest::Approx(5.9e-3).epsilon(1e-9));
    CHECK(s.t_calib == doctest::Approx(1.0 / 30.0 - 11.97e-3 - 5.9e-3).epsilon(1e-9));
    CHECK(s.t_calib == doctest::Approx(15.463e-3).epsilon(1e-4));
    CHECK(compute_windows(1, 180, cam).t_delay == 0.0);
  }

  TEST_CASE("windows partition the frame period") {
    const CameraConfig cam = default_camera();
    for (long n_up = 1; n_up < 900; n_up += 37) {
      for (long n_sign = 1; n_up - 1 + n_sign <= 1088; n_sign += 53) {
        const auto s = compute_windows(n_up, n_sign, cam);
        CHECK(std::abs(s.t_delay + s.t_att + s.t_calib - cam.t_frame()) <= 1e-12);
        CHECK(s.t_att >= cam.t_exp);
      }
    }
  }

  TEST_CASE("window errors") {
    const CameraConfig cam = default_camera();
    CHECK_THROWS_AS(compute_windows(0, 10, cam), DomainError);
    CHECK_THROWS_AS(compute_windows(1000, 100, cam), DomainError);
    CameraConfig slow = cam;
    slow.t_exp = 4e-3;
    slow.n_lines = 1000;
    CHECK_THROWS_AS(compute_windows(1, 1000, slow), WindowOverflowError);
  }

  TEST_CASE("replay offsets") {
    const CameraConfig cam = default_camera();
    ReplayPlan p;
    p.mode = ReplayMode::primitive;
    CHECK(replay_offset(p, cam, 5) == doctest::Approx(0.967e-3).epsilon(1e-3));
    CHECK(replay_offset(p, cam, 5) == doctest::Approx(5.0 * cam.drift()).epsilon(1e-12));
    p.delta0 = 0.25e-3;
    for (std::size_t n = 0; n < 400; ++n) {
      const double d = replay_offset(p, cam, n + 1) - replay_offset(p, cam, n);
      CHECK(std::abs(wrap_offset(d - cam.drift(), cam.t_frame())) <= 1e-12);
      const double o = replay_offset(p, cam, n);
      CHECK(o >= -0.5 * cam.t_frame());
      CHECK(o < 0.5 * cam.t_frame());
    }
    p.mode = ReplayMode::freq_calibrated;
    for (std::size_t n = 0; n < 50; ++n) CHECK(replay_offset(p, cam, n) == 0.25e-3);
    p.mode = ReplayMode::phase_synced;
    p.jitter_sd = 0.0;
    CHECK(replay_offset(p, cam, 7) == 0.0);
    p.jitter_sd = 30e-6;
    p.seed = 4;
    CHECK(replay_offset(p, cam, 7) == replay_offset(p, cam, 7));
    CHECK(replay_offset(p, cam, 7) != replay_offset(p, cam, 8));
    const double low = replay_offset(p, cam, 7);
    p.seed = 4 + (std::uint64_t{1} << 32);
    CHECK(replay_offset(p, cam, 7) != low);
  }

  TEST_CASE("phase jitter has the configured spread") {
    const CameraConfig cam = default_camera();
    ReplayPlan p;
    p.mode = ReplayMode::phase_synced;
    p.jitter_sd = 60e-6;
    p.seed = 21;
    double s1 = 0.0;
    double s2 = 0.0;
    const int n = 5000;
    for (int i = 0; i < n; ++i) {
      const double d = replay_offset(p, cam, static_cast<std::size_t>(i));
      s1 += d;
      s2 += d * d;
    }
    CHECK(std::abs(s1 / n) < 4.0 * 60e-6 / std::sqrt(n));
    CHECK(std::sqrt(s2 / n) == doctest::Approx(60e-6).epsilon(0.05));
  }

  TEST_CASE("wrap interval") {
    CHECK(wrap_offset(0.0, 1.0) == 0.0);
    CHECK(wrap_offset(0.5, 1.0) == -0.5);
    CHECK(wrap_offset(-0.5, 1.0) == -0.5);
    CHECK(wrap_offset(1.25, 1.0) == doctest::Approx(0.25));
    CHECK(wrap_offset(-1.75, 1.0) == doctest::Approx(0.25));
  }

  TEST_CASE("scaling by one is the identity") {
    const auto f = random_signal(120, 30e-6, 3);
    CHECK(scale_signal(f, f.duration(), f.duration()) == f);
    CHECK_THROWS_AS(scale_signal(f, f.duration(), 0.5 * f.duration()), DomainError);
  }

  TEST_CASE("factor-two stretch repeats every sample") {
    const double dt = 10e-6;
    const FlickerSignal f({std::vector<double>{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, dt);
    const auto s = scale_signal(f, 2 * dt, 4 * dt);
    CHECK(s.sample_count() == 4);
    CHECK(s.sample_dt() == doctest::Approx(dt));
    CHECK(std::vector<double>(s.channel(0).begin(), s.channel(0).end()) == std::vector<double>{1, 1, 0, 0});
    CHECK(std::vector<double>(s.channel(2).begin(), s.channel(2).end()) == std::vector<double>{0, 0, 1, 1});
  }

  TEST_CASE("stretched stripes land on rescaled rows") {
    const CameraConfig cam = default_camera();
    const std::size_t n_sign0 = 120;
    const double t_att0 = static_cast<double>(n_sign0) * cam.t_ro + cam.t_exp;
    // Four binary stripes per channel on a t_ro grid.
    const std::size_t n0 = grid_count(t_att0, cam.t_ro);
    FlickerSignal::Channels ch;
    for (std::size_t c = 0; c < 3; ++c) {
      ch[c].resize(n0);
      for (std::size_t k = 0; k < n0; ++k) ch[c][k] = ((k * 4 / n0 + c) % 2 == 0) ? 1.0 : 0.0;
    }
    const FlickerSignal f0(ch, t_att0 / static_cast<double>(n0), Extension::zero);
    const double ratio = 1.37;
    const FlickerSignal f = scale_signal(f0, t_att0, ratio * t_att0);
    CHECK(f.duration() == doctest::Approx(ratio * t_att0).epsilon(1e-12));
    const auto n_sign = static_cast<std::size_t>((ratio * t_att0 - cam.t_exp) / cam.t_ro);
    const auto g0 = row_gains(f0, cam, 0.0, n_sign0);
    const auto g1 = row_gains(f, cam, 0.0, n_sign);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto e0 = half_crossings(g0, cam, c);
      const auto e1 = half_crossings(g1, cam, c);
      REQUIRE(e0.size() >= 2);
      REQUIRE(e0.size() == e1.size());
      for (std::size_t i = 0; i < e0.size(); ++i) CHECK(std::abs(e1[i] - ratio * e0[i]) <= cam.t_ro);
    }
  }

  TEST_CASE("phase-synced waveform without fill lights only the sign rows") {
    const CameraConfig cam = default_camera();
    const long n_up = 300;
    const long n_sign = 150;
    auto s = compute_windows(n_up, n_sign, cam);
    ReplayPlan plan;
    plan.mode = ReplayMode::phase_synced;
    plan.fill_windows = false;
    const std::size_t n = grid_count(s.t_att, cam.t_ro);
    FlickerSignal f = random_signal(n, s.t_att / static_cast<double>(n), 8, 0.2);
    const auto w = effective_waveform(s, plan, f, cam);
    CHECK(w.duration() == doctest::Approx(cam.t_frame()).epsilon(1e-12));
    const double exp_rows = cam.t_exp / cam.t_ro;
    for (std::size_t v = 0; v < cam.n_lines; ++v) {
      const double row = static_cast<double>(v);
      const bool before = row + exp_rows < static_cast<double>(n_up - 1) - 1.0;
      const bool after = row > static_cast<double>(n_up - 1 + n_sign) + exp_rows + 1.0;
      if (before || after) {
        for (double x : scanline_gain(w, cam, v)) CHECK(x == 0.0);
      }
    }
    const auto designed = row_gains(f.with_extension(Extension::zero), cam, 0.0, static_cast<std::size_t>(n_sign));
    for (long v = 0; v < n_sign; ++v) {
      const Rgb g = scanline_gain(w, cam, static_cast<std::size_t>(n_up - 1 + v));
      for (std::size_t c = 0; c < 3; ++c) CHECK(g[c] == doctest::Approx(designed[v][c]).epsilon(0.01));
    }
    CHECK_THROWS_AS(effective_waveform(s, plan, random_signal(n + 5, f.sample_dt(), 1), cam), DomainError);
  }

  TEST_CASE("fill replays the pattern through the delay and calibration windows") {
    const CameraConfig cam = default_camera();
    const auto s = compute_windows(300, 150, cam);
    ReplayPlan plan;
    plan.mode = ReplayMode::freq_calibrated;
    plan.fill_windows = true;
    const std::size_t n = grid_count(s.t_att, cam.t_ro);
    const FlickerSignal f = random_signal(n, s.t_att / static_cast<double>(n), 9, 0.1);
    const auto w = effective_waveform(s, plan, f, cam);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto ch = w.channel(c);
      CHECK(*std::min_element(ch.begin(), ch.end()) > 0.0);
    }
    CHECK(fills_windows(plan));
    plan.mode = ReplayMode::phase_synced;
    CHECK_FALSE(fills_windows(plan));
    plan.mode = ReplayMode::primitive;
    plan.fill_windows = false;
    CHECK(fills_windows(plan));
  }

  TEST_CASE("primitive replay drifts the stripe by the per-frame slack") {
    const CameraConfig cam = default_camera();
    const std::size_t n = grid_count(cam.t_cap(), cam.t_ro);
    ReplayPlan plan;
    plan.mode = ReplayMode::primitive;
    ReplayScheduler sched(cam, plan, pulse(n, 100, 10, cam.t_cap() / static_cast<double>(n)), 1);
    const double rows_per_frame = cam.drift() / cam.t_ro;
    double c0 = 0.0;
    for (std::size_t k = 0; k < 30; ++k) {
      const auto fr = sched.advance(std::nullopt);
      const double c = centroid(row_gains(fr.waveform, cam, 0.0, cam.n_lines));
      if (k == 0) c0 = c;
      CHECK(std::abs(c - c0 - static_cast<double>(k) * rows_per_frame) <= 1.0);
    }
  }

  TEST_CASE("frequency-calibrated replay freezes the stripes") {
    const CameraConfig cam = default_camera();
    ReplayPlan plan;
    plan.mode = ReplayMode::freq_calibrated;
    plan.delta0 = 1.234e-3;
    const double t_att0 = 100 * cam.t_ro + cam.t_exp;
    const std::size_t n = grid_count(t_att0, cam.t_ro);
    ReplayScheduler sched(cam, plan, random_signal(n, t_att0 / static_cast<double>(n), 10), 1);
    std::vector<Rgb> first;
    for (std::size_t k = 0; k < 20; ++k) {
      const auto fr = sched.advance(SignReport{280, 160});
      const auto g = row_gains(fr.waveform, cam, 0.0, cam.n_lines);
      if (k == 0) first = g;
      CHECK(g == first);
    }
  }

  TEST_CASE("phase-synced stripe top stays within six rows") {
    const CameraConfig cam = default_camera();
    ReplayPlan plan;
    plan.mode = ReplayMode::phase_synced;
    plan.jitter_sd = 2.0 * cam.t_ro;
    plan.fill_windows = false;
    plan.seed = 99;
    const long n_up = 300;
    const long n_sign = 150;
    const double t_att = static_cast<double>(n_sign) * cam.t_ro + cam.t_exp;
    const std::size_t n = grid_count(t_att, cam.t_ro);
    ReplayScheduler sched(cam, plan, FlickerSignal::constant(1.0, n, t_att / static_cast<double>(n)), 0);
    const int frames = 1000;
    int within = 0;
    for (int k = 0; k < frames; ++k) {
      const auto fr = sched.advance(SignReport{n_up, n_sign});
      const auto g = row_gains(fr.waveform, cam, 0.0, cam.n_lines);
      long top = -1;
      for (std::size_t v = 0; v < g.size(); ++v) {
        if (g[v][0] >= 0.999) {
          top = static_cast<long>(v) + 1;
          break;
        }
      }
      if (top > 0 && std::abs(top - n_up) <= 6) ++within;
    }
    CHECK(within >= frames * 99 / 100);
  }

  TEST_CASE("scheduler applies reports after the latency") {
    const CameraConfig cam = default_camera();
    ReplayPlan plan;
    plan.mode = ReplayMode::phase_synced;
    const double t_att0 = 50 * cam.t_ro + cam.t_exp;
    const std::size_t n = grid_count(t_att0, cam.t_ro);
    ReplayScheduler sched(cam, plan, FlickerSignal::constant(1.0, n, t_att0 / static_cast<double>(n)), 1);
    CHECK(sched.advance(SignReport{100, 60}).schedule.n_up == 100);
    CHECK(sched.advance(SignReport{110, 62}).schedule.n_up == 100);
    const auto fr = sched.advance(SignReport{120, 64});
    CHECK(fr.schedule.n_up == 110);
    CHECK(fr.schedule.n_sign == 62);
    CHECK(fr.schedule.t_att == doctest::Approx(62 * cam.t_ro + cam.t_exp));
    CHECK(sched.advance(std::nullopt).schedule.n_up == 120);
    // A sign smaller than the design keeps the designed pattern.
    ReplayScheduler small(cam, plan, FlickerSignal::constant(1.0, n, t_att0 / static_cast<double>(n)), 0);
    const auto s = small.advance(SignReport{100, 20});
    CHECK(s.schedule.t_att == doctest::Approx(t_att0));
    CHECK(std::abs(s.schedule.t_delay + s.schedule.t_att + s.schedule.t_calib - cam.t_frame()) <= 1e-12);
    ReplayScheduler empty(cam, plan, FlickerSignal::constant(1.0, n, t_att0 / static_cast<double>(n)), 0);
    CHECK_THROWS_AS(empty.advance(std::nullopt), DomainError);
  }
}
