#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "stripeforge/camera.hpp"

namespace stripeforge {

/// Camera supply-current measurement. `moments` holds the true framing
/// moments for synthetic traces (empty for loaded ones).
struct CurrentTrace {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::vector<double> moments;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  double time(std::size_t i) const { return static_cast<double>(i) / sample_rate; }
};

struct TraceParams {
  double duration = 1.0;
  double sample_rate = 50e3;
  double spike_amp = 1.0;
  double noise_sd = 0.05;
  double spike_jitter_sd = 0.0;
  double spike_lead = 0.0;         ///< spike peak precedes the framing moment by this much
  double spike_width = 0.6e-3;     ///< triangle base, seconds
  double ripple = 0.1;             ///< frame-rate readout ripple, fraction of spike_amp
  double first_moment = 0.25;      ///< first framing moment, fraction of the frame period
  std::uint64_t seed = 0;
};

/// Gaussian baseline noise, a sinusoidal readout ripple at the frame rate
/// and one triangular spike per frame period.
CurrentTrace synthesize_trace(const CameraConfig& cam, const TraceParams& params);

struct DetectorParams {
  double threshold_factor = 4.0;  ///< threshold = mean + factor * sd of the filtered trace
  double frame_rate = 30.0;       ///< sets the refractory window
  double refractory = 0.5;        ///< fraction of the frame period
  double spike_width = 0.6e-3;   ///< seconds
};

/// Matched-filters the trace with the spike template, thresholds it and
/// keeps the peak sample of each suprathreshold event. Throws NoSignalError
/// when nothing crosses the threshold.
std::vector<double> detect_spikes(const CurrentTrace& trace, const DetectorParams& params);

struct Spectrum {
  std::vector<double> freq;   ///< Hz
  std::vector<double> power;  ///< one-sided PSD
};

/// Welch estimate: Hann-windowed segments of `segment` samples with 50 %
/// overlap, each zero-padded to `segment * pad`.
Spectrum welch_psd(std::span<const double> x, double sample_rate, std::size_t segment, std::size_t pad = 1);

/// Frame rate from the spectral line structure of the trace: the strongest
/// non-DC line, then the lowest sub-multiple of it within 6 dB, refined by
/// parabolic interpolation. An optional hint limits the search to
/// [0.5, 1.5] * hint. Throws EstimationError for a flat spectrum.
double estimate_frame_rate(const CurrentTrace& trace, std::optional<double> fps_hint = std::nullopt);

/// Affine map from the delay setting to the observed top lit row:
/// n_up = a * n_set + b, with n_set = t_set / t_ro + 1.
struct DelayMapping {
  struct Observation {
    long n_set;
    double n_up;
  };
  std::vector<Observation> table;
  double a = 1.0;
  double b = 0.0;
  double residual = 0.0;  ///< max |observed - fitted|, rows
  double t_ro = 0.0;

  double predict_n_up(double t_set) const;
  /// Delay after the detected spike that puts the top lit row at n_up.
  double t_set_for(double n_up) const;
};

/// Camera under calibration: its framing sniffer sees spikes spike_lead
/// before the true framing moments.
struct SimulatedCamera {
  CameraConfig cam;
  double spike_lead = 0.0;
  double spike_jitter_sd = 0.0;
  double noise_sd = 0.02;
  double sample_rate = 50e3;
  std::uint64_t seed = 0;
};

/// Fires a pulse t_set after each detected spike of `frames` frames and
/// returns the top lit row (1-based) of every frame.
std::vector<long> observe_top_rows(const SimulatedCamera& camera, double t_set, std::size_t frames = 8);

/// Sweeps n_set over the grid, takes the median observed top row per
/// setting and fits the affine map. Throws CalibrationError when the
/// observations are not strictly increasing or the fit residual exceeds
/// 2 rows.
DelayMapping calibrate_delay_mapping(const SimulatedCamera& camera, std::span<const long> n_set_grid,
                                     std::size_t frames = 8);

/// CSV with header "t_s,amps".
void write_trace_csv(const std::filesystem::path& path, const CurrentTrace& trace);
CurrentTrace read_trace_csv(const std::filesystem::path& path);
/// Little-endian f32 samples plus a JSON sidecar <path>.json holding sample_rate_hz.
void write_trace_f32(const std::filesystem::path& path, const CurrentTrace& trace);
CurrentTrace read_trace_f32(const std::filesystem::path& path);

}  // namespace stripeforge
