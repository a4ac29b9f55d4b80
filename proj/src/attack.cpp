#include "stripeforge/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stripeforge/error.hpp"

namespace stripeforge {

namespace {

std::size_t objective_class(const AttackObjectiveSpec& spec) {
  return spec.target.value_or(spec.ground_truth);
}

double objective_sign(const AttackObjectiveSpec& spec) { return spec.target ? 1.0 : -1.0; }

const Resampler& model_resampler(const AttackObjectiveSpec& spec, const SurrogateModel& model,
                                 std::optional<Resampler>& cache) {
  if (!cache) {
    const auto& arch = model.architecture();
    cache = Resampler::bilinear(spec.scene_crop.rows(), spec.scene_crop.cols(), arch.rows, arch.cols);
  }
  return *cache;
}

AttackObjectiveSpec base_spec(RadiometricScene scene_crop, const CameraConfig& cam,
                              std::size_t ground_truth) {
  AttackObjectiveSpec s;
  s.n_sign0 = scene_crop.rows();
  s.scene_crop = std::move(scene_crop);
  s.cam = cam;
  s.ground_truth = ground_truth;
  s.t_att0 = static_cast<double>(s.n_sign0) * cam.t_ro + cam.t_exp;
  return s;
}

}  // namespace

AttackObjectiveSpec AttackObjectiveSpec::phase_synced(RadiometricScene scene_crop, const CameraConfig& cam,
                                                      std::size_t ground_truth, std::size_t target) {
  auto s = base_spec(std::move(scene_crop), cam, ground_truth);
  s.target = target;
  s.phi_max = 0.1 * static_cast<double>(s.n_sign0);
  s.phi_min = -s.phi_max;
  s.phi_samples = 5;
  s.extension = Extension::zero;
  return s;
}

AttackObjectiveSpec AttackObjectiveSpec::freq_calibrated(RadiometricScene scene_crop,
                                                         const CameraConfig& cam, std::size_t ground_truth) {
  auto s = base_spec(std::move(scene_crop), cam, ground_truth);
  s.phi_min = 0.0;
  s.phi_max = static_cast<double>(s.n_sign0);
  s.phi_samples = 16;
  s.extension = Extension::periodic;
  return s;
}

std::vector<double> AttackObjectiveSpec::phi_grid() const {
  std::vector<double> grid(phi_samples);
  const double w = (phi_max - phi_min) / static_cast<double>(phi_samples);
  for (std::size_t i = 0; i < phi_samples; ++i) grid[i] = phi_min + (static_cast<double>(i) + 0.5) * w;
  return grid;
}

void AttackObjectiveSpec::validate() const {
  cam.validate();
  if (scene_crop.rows() == 0 || scene_crop.cols() == 0) throw ConfigError("empty scene crop");
  if (n_sign0 == 0) throw ConfigError("n_sign0 must be positive");
  if (phi_samples == 0) throw ConfigError("phi_samples must be at least 1");
  const double lim = static_cast<double>(n_sign0);
  if (phi_min > phi_max || phi_min < -lim || phi_max > lim) {
    throw ConfigError("phi range must lie within [-n_sign0, n_sign0]");
  }
  if (!(t_att0 > 0.0)) throw ConfigError("t_att0 must be positive");
}

FlickerSignal attack_signal(const AttackObjectiveSpec& spec, std::span<const double> r,
                            std::span<const double> g, std::span<const double> b) {
  const std::size_t n = grid_count(spec.t_att0, spec.cam.t_ro);
  if (r.size() != n || g.size() != n || b.size() != n) throw DomainError("attack waveform has the wrong length");
  FlickerSignal::Channels ch{std::vector<double>(r.begin(), r.end()), std::vector<double>(g.begin(), g.end()),
                             std::vector<double>(b.begin(), b.end())};
  return FlickerSignal(std::move(ch), spec.t_att0 / static_cast<double>(n), spec.extension);
}

FlickerSignal constant_attack_signal(const AttackObjectiveSpec& spec, double level) {
  return FlickerSignal::constant_for(level, spec.t_att0, spec.cam.t_ro, spec.extension);
}

Image render_attack_crop(const FlickerSignal& f0, const AttackObjectiveSpec& spec, double phi) {
  const auto f = f0.extension() == spec.extension ? f0 : f0.with_extension(spec.extension);
  return compose(spec.scene_crop, row_gains(f, spec.cam, phi, spec.scene_crop.rows()));
}

double expected_loss_at(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                        const SurrogateModel& model, std::span<const double> phis) {
  if (phis.empty()) throw DomainError("empty offset grid");
  std::optional<Resampler> rs;
  const auto& resampler = model_resampler(spec, model, rs);
  const std::size_t k = objective_class(spec);
  double total = 0.0;
  for (double phi : phis) total += model.loss(resampler.apply(render_attack_crop(f0, spec, phi)), k);
  return objective_sign(spec) * total / static_cast<double>(phis.size());
}

double expected_loss(const FlickerSignal& f0, const AttackObjectiveSpec& spec, const SurrogateModel& model) {
  if (std::abs(f0.duration() - spec.t_att0) > 1e-9 * std::max(1.0, spec.t_att0) + 1e-12) {
    throw DomainError("attack waveform duration differs from t_att0");
  }
  const auto grid = spec.phi_grid();
  return expected_loss_at(f0, spec, model, grid);
}

LossGradient expected_loss_gradient(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                                    const SurrogateModel& model) {
  const auto f = f0.extension() == spec.extension ? f0 : f0.with_extension(spec.extension);
  std::optional<Resampler> rs;
  const auto& resampler = model_resampler(spec, model, rs);
  const std::size_t k = objective_class(spec);
  const auto grid = spec.phi_grid();
  const double weight = objective_sign(spec) / static_cast<double>(grid.size());
  const auto& scene = spec.scene_crop;
  const double t_ro = spec.cam.t_ro;
  const double t_exp = spec.cam.t_exp;

  LossGradient out;
  for (auto& c : out.grad) c.assign(f.sample_count(), 0.0);
  for (double phi : grid) {
    const Image crop = compose(scene, row_gains(f, spec.cam, phi, scene.rows()));
    auto [loss, g_model] = model.loss_and_gradient(resampler.apply(crop), k);
    out.loss += weight * loss;
    const Image g_crop = resampler.adjoint(g_model);
    for (std::size_t r = 0; r < scene.rows(); ++r) {
      std::array<double, 3> row_grad{};
      for (std::size_t col = 0; col < scene.cols(); ++col) {
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double att = scene.full.at(r, col, ch) - scene.amb.at(r, col, ch);
          row_grad[ch] += g_crop.at(r, col, ch) * att;
        }
      }
      const double start = (phi + static_cast<double>(r)) * t_ro;
      f.for_each_overlap(start, start + t_exp, [&](std::size_t s, double ov) {
        for (std::size_t ch = 0; ch < 3; ++ch) out.grad[ch][s] += weight * row_grad[ch] * ov / t_exp;
      });
    }
  }
  return out;
}

double attack_success_rate(const FlickerSignal& f0, const AttackObjectiveSpec& spec,
                           const SurrogateModel& model) {
  std::optional<Resampler> rs;
  const auto& resampler = model_resampler(spec, model, rs);
  const auto grid = spec.phi_grid();
  std::size_t hits = 0;
  for (double phi : grid) {
    const auto cls = model.predict(resampler.apply(render_attack_crop(f0, spec, phi))).cls;
    hits += spec.target ? (cls == *spec.target) : (cls != spec.ground_truth);
  }
  return static_cast<double>(hits) / static_cast<double>(grid.size());
}

AttackResult optimize_pgd(const AttackObjectiveSpec& spec, const SurrogateModel& model,
                          const PgdParams& params, std::uint64_t seed) {
  spec.validate();
  if (!(params.step_size > 0.0)) throw ConfigError("PGD step size must be positive");
  const std::size_t n = grid_count(spec.t_att0, spec.cam.t_ro);
  const double dt = spec.t_att0 / static_cast<double>(n);
  FlickerSignal::Channels x;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& c : x) {
    c.resize(n);
    for (auto& v : c) v = params.random_init ? unit(rng) : 0.5;
  }

  FlickerSignal current(x, dt, spec.extension);
  LossGradient lg = expected_loss_gradient(current, spec, model);
  AttackResult res;
  res.signal = current;
  res.loss = lg.loss;
  res.history.push_back(lg.loss);
  double step = params.step_size;
  for (std::size_t it = 0; it < params.steps; ++it) {
    res.iterations = it + 1;
    FlickerSignal::Channels y = current.channels();
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t s = 0; s < n; ++s) {
        const double g = lg.grad[c][s];
        const double dir = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        y[c][s] = std::clamp(y[c][s] - step * dir, 0.0, 1.0);
      }
    }
    FlickerSignal candidate(std::move(y), dt, spec.extension);
    LossGradient next = expected_loss_gradient(candidate, spec, model);
    if (params.backtracking && next.loss > lg.loss) {
      step *= 0.5;
      if (step < params.min_step) break;
      continue;
    }
    current = std::move(candidate);
    lg = std::move(next);
    res.history.push_back(lg.loss);
    if (lg.loss < res.loss) {
      res.loss = lg.loss;
      res.signal = current;
    }
  }
  res.success_rate = attack_success_rate(res.signal, spec, model);
  res.converged = res.success_rate >= 1.0;
  return res;
}

FlickerSignal StripeVector::to_signal(const AttackObjectiveSpec& spec) const {
  if (q == 0 || values.size() != 3 * q) throw DomainError("stripe vector must hold 3*q values");
  const std::size_t n = grid_count(spec.t_att0, spec.cam.t_ro);
  FlickerSignal::Channels ch;
  for (std::size_t c = 0; c < 3; ++c) {
    ch[c].resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const auto i = std::min(q - 1, static_cast<std::size_t>((static_cast<double>(s) + 0.5) *
                                                               static_cast<double>(q) / static_cast<double>(n)));
      ch[c][s] = values[c * q + i];
    }
  }
  return FlickerSignal(std::move(ch), spec.t_att0 / static_cast<double>(n), spec.extension);
}

BlackBoxResult optimize_bo(const AttackObjectiveSpec& spec, const SurrogateModel& model, std::size_t q,
                           std::size_t budget, std::uint64_t seed, const BoOptions& options) {
  spec.validate();
  if (q < 1 || q > 16) throw ConfigError("stripe count q must be in [1, 16]");
  if (budget < 30 * q) throw ConfigError("query budget must be at least 10 * 3q");
  const Resampler resampler =
      Resampler::bilinear(spec.scene_crop.rows(), spec.scene_crop.cols(), model.architecture().rows,
                          model.architecture().cols);
  const auto grid = spec.phi_grid();
  const std::size_t k = objective_class(spec);
  const double sign = objective_sign(spec);
  auto objective = [&](std::span<const double> x) {
    StripeVector sv{q, std::vector<double>(x.begin(), x.end())};
    const FlickerSignal f = sv.to_signal(spec);
    double total = 0.0;
    for (double phi : grid) {
      const auto p = model.predict(resampler.apply(render_attack_crop(f, spec, phi))).probabilities;
      total -= std::log(std::max(p[k], 1e-300));
    }
    return sign * total / static_cast<double>(grid.size());
  };
  const BoResult bo = bayes_minimize(objective, 3 * q, budget, seed, options);
  BlackBoxResult out;
  out.stripes = StripeVector{q, bo.x};
  out.loss = bo.value;
  out.queries = bo.queries;
  out.success_rate = attack_success_rate(out.stripes.to_signal(spec), spec, model);
  return out;
}

SweepResult sweep_q(const AttackObjectiveSpec& spec, const SurrogateModel& model, std::size_t q_min,
                    std::size_t q_max, std::size_t budget_per_q, std::uint64_t seed, const BoOptions& options) {
  if (q_min > q_max) throw ConfigError("empty q range");
  SweepResult out;
  for (std::size_t q = q_min; q <= q_max; ++q) {
    out.per_q.push_back(optimize_bo(spec, model, q, budget_per_q, seed, options));
    if (out.per_q.size() == 1 || out.per_q.back().loss < out.best.loss) out.best = out.per_q.back();
  }
  return out;
}

}  // namespace stripeforge
