#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stripeforge/camera.hpp"
#include "stripeforge/classifier.hpp"
#include "stripeforge/geometry.hpp"
#include "stripeforge/render.hpp"
#include "stripeforge/signal.hpp"

namespace stripeforge {

enum class AttackMode { random, primitive, gs1, gs2, gs2_still };

std::string_view mode_name(AttackMode mode);
/// Accepts random, primitive, gs1, gs2, gs2-still; throws ConfigError.
AttackMode parse_mode(std::string_view name);
bool is_targeted(AttackMode mode);

/// An optimised attack waveform f0 and the sign size it was designed for.
struct AttackSignal {
  FlickerSignal f0;
  double t_att0 = 0.0;
  std::size_t n_sign0 = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

/// JSON with sample_dt_us, t_att0_us, n_sign0, extension, r/g/b sample
/// arrays and a metadata object.
void save_signal(const std::filesystem::path& path, const AttackSignal& signal);
AttackSignal load_signal(const std::filesystem::path& path);

struct SceneConfig {
  Rgb alpha{0.2, 0.2, 0.2};
  Rgb beta{0.8, 0.8, 0.8};
  double rho_texp = 1.0;
  double attenuation_exponent = 0.0;  ///< i_att scaled by (ref_z / z_t)^p
  double ref_z = 32.0;

  SceneParams params() const { return {alpha, beta, rho_texp}; }
};

/// Radiometric crop of sign `cls` rendered side x side pixels.
RadiometricScene sign_scene(std::size_t cls, std::size_t side, const SceneConfig& scene);

struct ScenarioConfig {
  CameraConfig cam;
  double t_exp_planned = 0.5e-3;  ///< exposure the attack signal is optimised for
  SignGeometry sign;
  TrackerConfig tracker;
  double start_z = 32.0;
  double end_z = 10.0;
  double speed = 10.0 / 3.6;  ///< m/s
  AttackMode mode = AttackMode::gs2;
  std::size_t ground_truth = 0;
  std::optional<std::size_t> target;
  std::optional<AttackSignal> signal;              ///< default waveform for every mode
  std::map<AttackMode, AttackSignal> mode_signals;  ///< per-mode overrides
  double jitter_sd = 30e-6;
  std::size_t latency_frames = 1;
  bool fill_windows = true;
  std::optional<double> still_distance;  ///< design distance for gs2-still
  std::size_t random_q = 8;
  SceneConfig scene;
  std::uint64_t seed = 1;
  std::filesystem::path model_path;
  std::filesystem::path csv_path;
  std::filesystem::path frames_dir;

  /// Camera with the planned exposure, used when optimising signals.
  CameraConfig planning_camera() const;
  const AttackSignal* signal_for(AttackMode m) const;
  /// Throws ConfigError when a field is out of range or a mode lacks its inputs.
  void validate() const;
};

/// Parses a scenario JSON document; relative paths resolve against `base_dir`.
/// `load_signals = false` skips reading attack signal files, e.g. before they are optimised.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {},
                              bool load_signals = true);
ScenarioConfig load_scenario(const std::filesystem::path& path, bool load_signals = true);

struct FrameRecord {
  std::size_t frame = 0;
  double t = 0.0;
  double z = 0.0;
  long n_up = 0;     ///< 1-based top scanline of the sign
  long n_sign = 0;
  double delta = 0.0;
  int pred = -1;     ///< -1 when the frame was excluded
  std::size_t gt = 0;
  double conf = 0.0;
  bool excluded() const { return pred < 0; }
};

struct AttackRun {
  AttackMode mode = AttackMode::gs2;
  std::size_t ground_truth = 0;
  std::optional<std::size_t> target;
  double frame_rate = 30.0;
  std::vector<FrameRecord> records;
  std::size_t not_visible = 0;
  std::size_t oversized = 0;

  std::size_t evaluated() const { return records.size() - not_visible - oversized; }
};

/// Drives the sign past the camera and classifies every frame. Throws
/// NotVisibleError when no frame shows the whole sign.
AttackRun run_scenario(const ScenarioConfig& cfg, const SurrogateModel& model);

/// Fraction of evaluated frames predicted as anything but the ground truth.
double misclassification_rate(const AttackRun& run);

struct PrimaryRate {
  std::optional<std::size_t> cls;
  double rate = 0.0;
};
/// With a target: fraction of evaluated frames predicted as the target.
/// Without: the most frequent wrong class (lowest index on ties) and its
/// fraction; empty class and rate 0 when nothing was misclassified.
PrimaryRate pmcr(const AttackRun& run, std::optional<std::size_t> target);
/// pmcr() with the run's own target for targeted modes.
PrimaryRate pmcr(const AttackRun& run);

/// Shannon entropy (bits) of the predicted classes in consecutive windows
/// of round(window_s * fps) frames. A trailing window is kept when at least
/// half full; excluded frames do not count towards the fill.
std::vector<double> windowed_entropy(const AttackRun& run, double window_s = 1.5);
double mean_entropy(const AttackRun& run, double window_s = 1.5);

struct DistanceBin {
  double z_lo = 0.0;
  double z_hi = 0.0;
  std::size_t frames = 0;
  std::size_t evaluated = 0;
  double mr = 0.0;
  double pmcr = 0.0;
};
/// Bins of width bin_m covering [min z, max z] of the run; the primary class
/// is fixed over the whole run.
std::vector<DistanceBin> distance_profile(const AttackRun& run, double bin_m = 1.0);

struct TrialSummary {
  AttackMode mode;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t frames = 0;
  std::size_t excluded = 0;
  double mr = 0.0;
  double pmcr = 0.0;
  std::optional<std::size_t> primary;
  double entropy = 0.0;
};

struct ModeSummary {
  AttackMode mode;
  std::size_t trials = 0;
  double mean_mr = 0.0;
  double median_mr = 0.0;
  double mean_pmcr = 0.0;
  double median_pmcr = 0.0;
  double mean_entropy = 0.0;
};

struct Comparison {
  std::vector<TrialSummary> trials;
  std::vector<ModeSummary> modes;
};

TrialSummary summarize(const AttackRun& run, std::size_t trial, std::uint64_t seed);

/// Runs every mode for `trials` trials with seeds base.seed + i.
Comparison compare_modes(const ScenarioConfig& base, std::span<const AttackMode> modes, std::size_t trials,
                         const SurrogateModel& model);

void write_run_csv(std::ostream& os, const AttackRun& run);
void write_run_csv(const std::filesystem::path& path, const AttackRun& run);
void write_comparison_csv(std::ostream& os, const Comparison& cmp);
void write_profile_csv(std::ostream& os, std::span<const DistanceBin> bins);

}  // namespace stripeforge
