#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stripeforge/bayesopt.hpp"
#include "stripeforge/camera.hpp"
#include "stripeforge/classifier.hpp"
#include "stripeforge/render.hpp"
#include "stripeforge/signal.hpp"

namespace stripeforge {

/// Expected loss over the vertical offset phi between designed and realised
/// stripes. Crop row v sees the exposure starting at (v + phi) * t_ro into
/// the attack waveform f0, which is read with `extension` outside its span.
struct AttackObjectiveSpec {
  RadiometricScene scene_crop;
  CameraConfig cam;
  std::size_t ground_truth = 0;
  std::optional<std::size_t> target;  ///< empty: untargeted (maximise loss to ground truth)
  double phi_min = 0.0;
  double phi_max = 0.0;
  std::size_t phi_samples = 1;
  double t_att0 = 0.0;
  std::size_t n_sign0 = 0;
  Extension extension = Extension::zero;

  /// Narrow-offset targeted regime: phi in [-0.1, 0.1] * n_sign0, 5 samples,
  /// dark LED outside the attack window.
  static AttackObjectiveSpec phase_synced(RadiometricScene scene_crop, const CameraConfig& cam,
                                          std::size_t ground_truth, std::size_t target);
  /// Wide-offset untargeted regime: phi in [0, n_sign0], 16 samples, cyclic replay.
  static AttackObjectiveSpec freq_calibrated(RadiometricScene scene_crop, const CameraConfig& cam,
                                             std::size_t ground_truth);

  /// Midpoints of phi_samples equal strata of [phi_min, phi_max].
  std::vector<double> phi_grid() const;
  void validate() const;
};

/// Attack waveform of duration t_att0 on a grid close to t_ro.
FlickerSignal attack_signal(const AttackObjectiveSpec& spec, std::span<const double> r,
                            std::span<const double> g, std::span<const double> b);
FlickerSignal constant_attack_signal(const AttackObjectiveSpec& spec, double level);

/// Crop rendered under f0 at offset phi.
Image render_attack_crop(const FlickerSignal& f0, const AttackObjectiveSpec& spec, double phi);

/// Mean over the phi grid of cross-entropy to the target, or of the negated
/// cross-entropy to the ground truth when untargeted. Lower is better for
/// the attacker.
double expected_loss(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                     const SurrogateModel& model);
double expected_loss_at(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                        const SurrogateModel& model, std::span<const double> phis);

struct LossGradient {
  double loss = 0.0;
  FlickerSignal::Channels grad;  ///< d loss / d sample, per channel
};
LossGradient expected_loss_gradient(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                                    const SurrogateModel& model);

/// Fraction of the phi grid on which the prediction is the target (targeted)
/// or differs from the ground truth (untargeted).
double attack_success_rate(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                           const SurrogateModel& model);

struct PgdParams {
  std::size_t steps = 200;
  double step_size = 0.05;
  double min_step = 1e-3;
  bool backtracking = true;
  bool random_init = true;  ///< seeded uniform start, otherwise 0.5 everywhere
};

struct AttackResult {
  FlickerSignal signal;
  double loss = 0.0;
  double success_rate = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;  ///< loss of every accepted iterate
};

/// Sign-gradient descent with box projection onto [0, 1] and best-iterate
/// tracking. With backtracking a step that raises the loss is rejected and
/// the step halves, so the history is non-increasing.
AttackResult optimize_pgd(const AttackObjectiveSpec& spec, const SurrogateModel& model,
                          const PgdParams& params, std::uint64_t seed);

/// q equal-duration stripes per channel; values[c * q + i] is stripe i of channel c.
struct StripeVector {
  std::size_t q = 0;
  std::vector<double> values;

  std::size_t dimension() const { return 3 * q; }
  /// Point-samples the stripes onto the attack waveform grid.
  FlickerSignal to_signal(const AttackObjectiveSpec& spec) const;
};

struct BlackBoxResult {
  StripeVector stripes;
  double loss = 0.0;
  double success_rate = 0.0;
  std::size_t queries = 0;
};

/// Bayesian optimisation over the 3q stripe intensities. Only the model's
/// output probabilities enter the objective.
BlackBoxResult optimize_bo(const AttackObjectiveSpec& spec, const SurrogateModel& model,
                           std::size_t q, std::size_t budget, std::uint64_t seed,
                           const BoOptions& options = {});

struct SweepResult {
  BlackBoxResult best;
  std::vector<BlackBoxResult> per_q;  ///< in q order
};

/// Runs optimize_bo for every q in [q_min, q_max] and keeps the lowest loss.
SweepResult sweep_q(const AttackObjectiveSpec& spec, const SurrogateModel& model, std::size_t q_min,
                    std::size_t q_max, std::size_t budget_per_q, std::uint64_t seed,
                    const BoOptions& options = {});

}  // namespace stripeforge
