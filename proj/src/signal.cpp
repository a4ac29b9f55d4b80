#include "stripeforge/signal.hpp"

#include <algorithm>
#include <cmath>

#include "stripeforge/error.hpp"

namespace stripeforge {

namespace {
constexpr double kDomainSlack = 1e-9;
}

std::size_t grid_count(double duration, double nominal_dt) {
  if (!(duration > 0.0) || !(nominal_dt > 0.0)) throw DomainError("grid needs positive duration and dt");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration / nominal_dt)));
}

FlickerSignal::FlickerSignal(Channels channels, double sample_dt, Extension ext)
    : channels_(std::move(channels)), dt_(sample_dt), ext_(ext) {
  if (!(dt_ > 0.0)) throw DomainError("sample_dt must be positive");
  const std::size_t n = channels_[0].size();
  if (n == 0) throw DomainError("flicker signal needs at least one sample");
  for (const auto& ch : channels_) {
    if (ch.size() != n) throw DomainError("flicker channels differ in length");
    for (double v : ch) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("flicker sample outside [0, 1]");
    }
  }
  build_prefix();
}

FlickerSignal FlickerSignal::constant(double level, std::size_t samples, double sample_dt,
                                      Extension ext) {
  std::vector<double> ch(samples, level);
  return FlickerSignal({ch, ch, ch}, sample_dt, ext);
}

FlickerSignal FlickerSignal::constant_for(double level, double duration, double nominal_dt,
                                          Extension ext) {
  const std::size_t n = grid_count(duration, nominal_dt);
  return constant(level, n, duration / static_cast<double>(n), ext);
}

FlickerSignal FlickerSignal::with_extension(Extension ext) const {
  FlickerSignal copy = *this;
  copy.ext_ = ext;
  return copy;
}

void FlickerSignal::build_prefix() {
  for (std::size_t c = 0; c < 3; ++c) {
    auto& cum = cumulative_[c];
    cum.assign(channels_[c].size() + 1, 0.0);
    for (std::size_t k = 0; k < channels_[c].size(); ++k) cum[k + 1] = cum[k] + channels_[c][k] * dt_;
  }
}

double FlickerSignal::base_prefix(std::size_t c, double x) const {
  const std::size_t n = sample_count();
  if (x <= 0.0) return 0.0;
  if (x >= duration()) return cumulative_[c][n];
  const auto k = std::min(n - 1, static_cast<std::size_t>(x / dt_));
  return cumulative_[c][k] + (x - static_cast<double>(k) * dt_) * channels_[c][k];
}

double FlickerSignal::prefix(std::size_t c, double x) const {
  if (ext_ == Extension::periodic) {
    const double period = duration();
    const double m = std::floor(x / period);
    return m * cumulative_[c][sample_count()] + base_prefix(c, x - m * period);
  }
  return base_prefix(c, x);
}

void FlickerSignal::check_domain(double a, double b) const {
  if (ext_ != Extension::none) return;
  const double slack = kDomainSlack * std::max(duration(), 1.0);
  if (a < -slack || b > duration() + slack) {
    throw DomainError("interval lies outside a non-periodic flicker signal");
  }
}

double FlickerSignal::integral(std::size_t c, double a, double b) const {
  check_domain(a, b);
  return prefix(c, b) - prefix(c, a);
}

void FlickerSignal::for_each_overlap(double a, double b,
                                     const std::function<void(std::size_t, double)>& visit) const {
  check_domain(a, b);
  const std::size_t n = sample_count();
  const double period = duration();
  auto visit_base = [&](double lo, double hi) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, period);
    if (hi <= lo) return;
    const auto k0 = std::min(n - 1, static_cast<std::size_t>(lo / dt_));
    for (std::size_t k = k0; k < n; ++k) {
      const double s0 = static_cast<double>(k) * dt_;
      if (s0 >= hi) break;
      const double ov = std::min(hi, s0 + dt_) - std::max(lo, s0);
      if (ov > 0.0) visit(k, ov);
    }
  };
  if (ext_ != Extension::periodic) {
    visit_base(a, b);
    return;
  }
  for (double m = std::floor(a / period); m * period < b; m += 1.0) {
    const double base = m * period;
    visit_base(std::max(a, base) - base, std::min(b, base + period) - base);
  }
}

}  // namespace stripeforge
