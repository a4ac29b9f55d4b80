#pragma once

#include <cstddef>

#include "stripeforge/attack.hpp"
#include "stripeforge/camera.hpp"
#include "stripeforge/classifier.hpp"
#include "stripeforge/geometry.hpp"
#include "stripeforge/scenario.hpp"
#include "stripeforge/signs.hpp"

namespace sftest {

inline constexpr std::size_t kStop = static_cast<std::size_t>(stripeforge::SignClass::stop);
inline constexpr std::size_t kNoEntry = static_cast<std::size_t>(stripeforge::SignClass::no_entry);
inline constexpr std::uint64_t kModelSeed = 7;

/// The default surrogate, trained once per process.
inline const stripeforge::SurrogateModel& default_model() {
  static const stripeforge::SurrogateModel model = stripeforge::train(
      stripeforge::generate_dataset(stripeforge::SignDatasetSpec{}), stripeforge::TrainParams{}, kModelSeed);
  return model;
}

/// Sign height in rows at the start of the default trajectory.
inline std::size_t design_rows(const stripeforge::ScenarioConfig& cfg) {
  const double y_t = cfg.sign.y_sign - cfg.tracker.y_cam;
  const auto p = stripeforge::project_sign(cfg.planning_camera(), cfg.sign, {cfg.start_z, y_t, 0.0, 0.0});
  return static_cast<std::size_t>(stripeforge::round_half_up(p.n_sign));
}

inline stripeforge::AttackObjectiveSpec gs2_spec(const stripeforge::ScenarioConfig& cfg) {
  const std::size_t rows = design_rows(cfg);
  return stripeforge::AttackObjectiveSpec::phase_synced(stripeforge::sign_scene(kStop, rows, cfg.scene),
                                                        cfg.planning_camera(), kStop, kNoEntry);
}

inline stripeforge::AttackObjectiveSpec gs1_spec(const stripeforge::ScenarioConfig& cfg) {
  const std::size_t rows = design_rows(cfg);
  return stripeforge::AttackObjectiveSpec::freq_calibrated(stripeforge::sign_scene(kStop, rows, cfg.scene),
                                                           cfg.planning_camera(), kStop);
}

inline stripeforge::PgdParams attack_pgd() {
  stripeforge::PgdParams p;
  p.steps = 200;
  p.step_size = 0.1;
  return p;
}

/// Default scenario with PGD-optimised signals for every mode.
inline stripeforge::ScenarioConfig attack_scenario(const stripeforge::SurrogateModel& model) {
  using namespace stripeforge;
  ScenarioConfig cfg;
  cfg.ground_truth = kStop;
  cfg.target = kNoEntry;
  cfg.still_distance = 21.0;
  const auto s2 = gs2_spec(cfg);
  const auto s1 = gs1_spec(cfg);
  const AttackSignal g2{optimize_pgd(s2, model, attack_pgd(), 1).signal, s2.t_att0, s2.n_sign0, {}};
  const AttackSignal g1{optimize_pgd(s1, model, attack_pgd(), 1).signal, s1.t_att0, s1.n_sign0, {}};
  cfg.mode_signals[AttackMode::gs2] = g2;
  cfg.mode_signals[AttackMode::gs2_still] = g2;
  cfg.mode_signals[AttackMode::gs1] = g1;
  cfg.mode_signals[AttackMode::primitive] = g1;
  return cfg;
}

}  // namespace sftest
