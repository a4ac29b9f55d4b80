#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stripeforge {

/// How a waveform is read outside its own [0, duration) domain.
enum class Extension {
  none,      ///< reading outside the domain is a DomainError
  periodic,  ///< repeats with period = duration
  zero,      ///< LED dark outside the domain
};

/// Per-channel (R, G, B) relative LED intensity, piecewise constant over
/// uniform samples of width sample_dt. Sample k covers [k*dt, (k+1)*dt).
class FlickerSignal {
 public:
  using Channels = std::array<std::vector<double>, 3>;

  FlickerSignal() = default;
  /// Throws DomainError if channels differ in length, are empty, or hold
  /// values outside [0, 1].
  FlickerSignal(Channels channels, double sample_dt, Extension ext = Extension::none);

  static FlickerSignal constant(double level, std::size_t samples, double sample_dt,
                                Extension ext = Extension::none);
  /// Grid of round(duration / nominal_dt) samples spanning exactly `duration`.
  static FlickerSignal constant_for(double level, double duration, double nominal_dt,
                                    Extension ext = Extension::none);

  std::size_t sample_count() const { return channels_[0].size(); }
  double sample_dt() const { return dt_; }
  double duration() const { return dt_ * static_cast<double>(sample_count()); }
  Extension extension() const { return ext_; }
  FlickerSignal with_extension(Extension ext) const;

  std::span<const double> channel(std::size_t c) const { return channels_[c]; }
  const Channels& channels() const { return channels_; }
  double value(std::size_t c, std::size_t k) const { return channels_[c][k]; }

  /// Exact integral of channel c over [a, b].
  double integral(std::size_t c, double a, double b) const;

  /// Calls visit(k, overlap) for every sample overlapping [a, b] after
  /// extension; overlap is the time the interval spends in that sample.
  /// This is the derivative of integral() with respect to sample k.
  void for_each_overlap(double a, double b,
                        const std::function<void(std::size_t, double)>& visit) const;

  friend bool operator==(const FlickerSignal&, const FlickerSignal&) = default;

 private:
  double prefix(std::size_t c, double x) const;
  double base_prefix(std::size_t c, double x) const;
  void check_domain(double a, double b) const;
  void build_prefix();

  Channels channels_;
  Channels cumulative_;
  double dt_ = 0.0;
  Extension ext_ = Extension::none;
};

/// Number of samples and exact sample width for a waveform of `duration`
/// on a grid close to `nominal_dt`.
std::size_t grid_count(double duration, double nominal_dt);

}  // namespace stripeforge
