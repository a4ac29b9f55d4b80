#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <utility>

#include "stripeforge/camera.hpp"
#include "stripeforge/signal.hpp"

namespace stripeforge {

/// Per-frame partition of the frame period. n_up is the 1-based index of
/// the sign's top scanline, so the attack window opens when that line
/// starts its exposure.
struct TimingSchedule {
  double t_delay = 0.0;
  double t_att = 0.0;
  double t_calib = 0.0;
  double delta = 0.0;  ///< replay onset minus framing moment
  std::size_t frame_index = 0;
  long n_up = 1;
  long n_sign = 0;
};

enum class ReplayMode {
  primitive,        ///< back-to-back replay, offset drifts by t_frame - t_cap per frame
  freq_calibrated,  ///< replay padded to the frame period, fixed unknown offset
  phase_synced,     ///< onset locked to the sniffed framing moment, jittered
};

struct ReplayPlan {
  ReplayMode mode = ReplayMode::phase_synced;
  double delta0 = 0.0;
  double jitter_sd = 0.0;
  bool fill_windows = true;
  std::uint64_t seed = 0;
};

/// t_delay = (n_up-1)*t_ro, t_att = n_sign*t_ro + t_exp, t_calib = rest.
/// Throws DomainError for n_up < 1 or a sign below the frame and
/// WindowOverflowError when t_calib would be negative.
TimingSchedule compute_windows(long n_up, long n_sign, const CameraConfig& cam);

/// Wraps an offset into [-t_frame/2, t_frame/2).
double wrap_offset(double delta, double t_frame);

/// Replay onset offset for frame n under the plan.
double replay_offset(const ReplayPlan& plan, const CameraConfig& cam, std::size_t frame_index);

/// Stretches f0 (designed for t_att0) to last t_att on a grid close to the
/// original sample_dt. Throws DomainError when t_att < t_att0.
FlickerSignal scale_signal(const FlickerSignal& f0, double t_att0, double t_att);

/// Whether the delay and calibration windows repeat f cyclically.
bool fills_windows(const ReplayPlan& plan);

/// One frame period of LED drive relative to the framing moment: f in the
/// attack window, darkness or cyclic fill elsewhere, shifted by
/// schedule.delta. The result is periodic with period t_frame.
FlickerSignal effective_waveform(const TimingSchedule& schedule, const ReplayPlan& plan,
                                 const FlickerSignal& f, const CameraConfig& cam);

/// Sign extent in scanlines as reported to the LED controller.
struct SignReport {
  long n_up = 1;
  long n_sign = 1;
};

/// LED controller state machine. Reports take effect latency_frames later;
/// until the first report is due the first one is used.
class ReplayScheduler {
 public:
  struct Frame {
    TimingSchedule schedule;
    FlickerSignal waveform;
  };

  ReplayScheduler(const CameraConfig& cam, ReplayPlan plan, FlickerSignal f0,
                  std::size_t latency_frames);

  /// Advances one frame. `report` is the tracker's reading for this frame
  /// (may be empty when the tracker did not report).
  Frame advance(std::optional<SignReport> report);

  std::size_t frame_index() const { return frame_; }

 private:
  CameraConfig cam_;
  ReplayPlan plan_;
  FlickerSignal f0_;
  double t_att0_;
  std::size_t latency_;
  std::deque<std::pair<std::size_t, SignReport>> pending_;  ///< (effective frame, report)
  std::optional<SignReport> active_;
  std::size_t frame_ = 0;
};

}  // namespace stripeforge
