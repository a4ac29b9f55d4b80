#include "stripeforge/timing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "stripeforge/error.hpp"

namespace stripeforge {

TimingSchedule compute_windows(long n_up, long n_sign, const CameraConfig& cam) {
  if (n_up < 1) throw DomainError("n_up is 1-based and must be at least 1");
  if (n_sign < 1) throw DomainError("n_sign must be at least 1");
  if (static_cast<std::size_t>(n_up - 1 + n_sign) > cam.n_lines) {
    throw DomainError("sign extends below the last scanline");
  }
  TimingSchedule s;
  s.n_up = n_up;
  s.n_sign = n_sign;
  s.t_delay = static_cast<double>(n_up - 1) * cam.t_ro;
  s.t_att = static_cast<double>(n_sign) * cam.t_ro + cam.t_exp;
  s.t_calib = cam.t_frame() - s.t_delay - s.t_att;
  if (s.t_calib < 0.0) throw WindowOverflowError("delay and attack windows exceed the frame period");
  return s;
}

double wrap_offset(double delta, double t_frame) {
  double w = std::fmod(delta + 0.5 * t_frame, t_frame);
  if (w < 0.0) w += t_frame;
  return w - 0.5 * t_frame;
}

double replay_offset(const ReplayPlan& plan, const CameraConfig& cam, std::size_t frame_index) {
  switch (plan.mode) {
    case ReplayMode::primitive:
      return wrap_offset(plan.delta0 + static_cast<double>(frame_index) * cam.drift(), cam.t_frame());
    case ReplayMode::freq_calibrated:
      return plan.delta0;
    case ReplayMode::phase_synced: {
      if (plan.jitter_sd <= 0.0) return 0.0;
      // Seeded per frame so the offset of frame n does not depend on call order.
      std::seed_seq seq{plan.seed & 0xffffffffu, plan.seed >> 32, static_cast<std::uint64_t>(frame_index),
                        std::uint64_t{0x6a17}};
      std::mt19937_64 rng(seq);
      return std::normal_distribution<double>(0.0, plan.jitter_sd)(rng);
    }
  }
  return 0.0;
}

FlickerSignal scale_signal(const FlickerSignal& f0, double t_att0, double t_att) {
  if (!(t_att0 > 0.0)) throw DomainError("t_att0 must be positive");
  if (t_att < t_att0 * (1.0 - 1e-12)) {
    throw DomainError("refusing to scale a signal down (sign smaller than the minimum)");
  }
  const std::size_t n0 = f0.sample_count();
  const std::size_t n = grid_count(t_att, f0.sample_dt());
  FlickerSignal::Channels out;
  for (std::size_t c = 0; c < 3; ++c) {
    out[c].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      // Cell centre mapped back through the stretch t -> t * t_att0 / t_att.
      const double pos = (static_cast<double>(j) + 0.5) * static_cast<double>(n0) / static_cast<double>(n);
      out[c][j] = f0.value(c, std::min(n0 - 1, static_cast<std::size_t>(pos)));
    }
  }
  return FlickerSignal(std::move(out), t_att / static_cast<double>(n), f0.extension());
}

bool fills_windows(const ReplayPlan& plan) {
  return plan.mode == ReplayMode::primitive ||
         (plan.fill_windows && plan.mode != ReplayMode::phase_synced);
}

FlickerSignal effective_waveform(const TimingSchedule& schedule, const ReplayPlan& plan,
                                 const FlickerSignal& f, const CameraConfig& cam) {
  if (std::abs(f.duration() - schedule.t_att) > 1e-9 * std::max(1.0, schedule.t_att) + 1e-12) {
    throw DomainError("attack signal duration does not match the attack window");
  }
  const double period = cam.t_frame();
  const FlickerSignal placed = f.with_extension(fills_windows(plan) ? Extension::periodic : Extension::zero);
  const std::size_t m = grid_count(period, f.sample_dt());
  const double dt = period / static_cast<double>(m);

  // Integral of the unshifted frame template over [0, x], x in [0, period].
  auto template_prefix = [&](std::size_t c, double x) {
    return placed.integral(c, -schedule.t_delay, x - schedule.t_delay);
  };
  std::array<double, 3> per_period{};
  for (std::size_t c = 0; c < 3; ++c) per_period[c] = template_prefix(c, period);
  // Integral of the period-extended, delta-shifted template over [0, x].
  auto shifted_prefix = [&](std::size_t c, double x) {
    const double y = x - schedule.delta;
    const double k = std::floor(y / period);
    return k * per_period[c] + template_prefix(c, y - k * period);
  };

  FlickerSignal::Channels out;
  for (std::size_t c = 0; c < 3; ++c) {
    out[c].resize(m);
    double prev = shifted_prefix(c, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double next = shifted_prefix(c, static_cast<double>(k + 1) * dt);
      out[c][k] = std::clamp((next - prev) / dt, 0.0, 1.0);
      prev = next;
    }
  }
  return FlickerSignal(std::move(out), dt, Extension::periodic);
}

ReplayScheduler::ReplayScheduler(const CameraConfig& cam, ReplayPlan plan, FlickerSignal f0,
                                 std::size_t latency_frames)
    : cam_(cam), plan_(plan), f0_(std::move(f0)), t_att0_(f0_.duration()), latency_(latency_frames) {}

ReplayScheduler::Frame ReplayScheduler::advance(std::optional<SignReport> report) {
  const std::size_t n = frame_++;
  if (report) pending_.emplace_back(n + latency_, *report);
  while (!pending_.empty() && pending_.front().first <= n) {
    active_ = pending_.front().second;
    pending_.pop_front();
  }
  if (!active_ && pending_.empty() && plan_.mode != ReplayMode::primitive) {
    throw DomainError("LED controller has not received any sign report");
  }
  const SignReport current = active_ ? *active_ : pending_.empty() ? SignReport{} : pending_.front().second;

  Frame out;
  if (plan_.mode == ReplayMode::primitive) {
    out.schedule.t_att = t_att0_;
    out.schedule.t_calib = cam_.t_frame() - t_att0_;
    out.schedule.n_up = 1;
    out.schedule.n_sign = 0;
    out.schedule.frame_index = n;
    out.schedule.delta = replay_offset(plan_, cam_, n);
    out.waveform = effective_waveform(out.schedule, plan_, f0_, cam_);
    return out;
  }
  out.schedule = compute_windows(current.n_up, current.n_sign, cam_);
  out.schedule.frame_index = n;
  out.schedule.delta = replay_offset(plan_, cam_, n);
  FlickerSignal f = f0_;
  if (out.schedule.t_att > t_att0_) {
    f = scale_signal(f0_, t_att0_, out.schedule.t_att);
  } else {
    // The controller cannot shrink the pattern; it replays f0 as designed.
    out.schedule.t_att = t_att0_;
    out.schedule.t_calib = cam_.t_frame() - out.schedule.t_delay - t_att0_;
    if (out.schedule.t_calib < 0.0) throw WindowOverflowError("minimum attack window overflows the frame");
  }
  out.waveform = effective_waveform(out.schedule, plan_, f, cam_);
  return out;
}

}  // namespace stripeforge
