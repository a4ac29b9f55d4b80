// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stripeforge/attack.hpp"
#include "stripeforge/classifier.hpp"
#include "stripeforge/error.hpp"
#include "stripeforge/geometry.hpp"
#include "stripeforge/render.hpp"
#include "stripeforge/scenario.hpp"
#include "stripeforge/signs.hpp"
#include "stripeforge/sniffer.hpp"
#include "stripeforge/timing.hpp"

using namespace stripeforge;

namespace {

constexpr std::size_t kStop = static_cast<std::size_t>(SignClass::stop);
constexpr std::size_t kNoEntry = static_cast<std::size_t>(SignClass::no_entry);

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FlickerSignal random_signal(std::size_t n, double dt, std::mt19937_64& rng, Extension ext) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FlickerSignal::Channels ch;
  for (auto& c : ch) {
    c.resize(n);
    for (auto& v : c) v = u(rng);
  }
  return FlickerSignal(std::move(ch), dt, ext);
}

// Shared state built by earlier criteria.
struct Context {
  std::optional<SurrogateModel> model;
  ScenarioConfig cfg;
  std::optional<AttackObjectiveSpec> gs2;
  std::optional<AttackObjectiveSpec> gs1;
  std::optional<FlickerSignal> gs2_signal;
  std::optional<FlickerSignal> gs1_signal;
};

std::size_t design_rows(const ScenarioConfig& cfg) {
  const auto p = project_sign(cfg.planning_camera(), cfg.sign, {cfg.start_z, cfg.sign.y_sign - cfg.tracker.y_cam, 0, 0});
  return static_cast<std::size_t>(round_half_up(p.n_sign));
}

PgdParams attack_pgd() {
  PgdParams p;
  p.steps = 200;
  p.step_size = 0.1;
  return p;
}

Outcome renderer_identities(Context&) {
  CameraConfig cam;
  cam.n_lines = 120;
  cam.n_cols = 64;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> phi(-50.0, 50.0);
  std::uniform_real_distribution<double> dt_scale(0.05, 3.0);
  int trials = 0;
  for (; trials < 100; ++trials) {
    Image amb(cam.n_lines, cam.n_cols);
    Image full(cam.n_lines, cam.n_cols);
    for (std::size_t i = 0; i < amb.size(); ++i) {
      const double a = u(rng);
      const double b = u(rng);
      amb.data()[i] = std::min(a, b);
      full.data()[i] = std::max(a, b);
    }
    const auto scene = RadiometricScene::from_images(amb, full);
    const double dt = dt_scale(rng) * cam.t_ro;
    const double p = phi(rng);
    const auto dark = FlickerSignal::constant_for(0.0, cam.t_frame(), dt, Extension::periodic);
    const auto lit = FlickerSignal::constant_for(1.0, cam.t_frame(), dt, Extension::periodic);
    if (!(render_frame(scene, cam, dark, p) == scene.amb)) return {false, fmt("dark frame differs in trial %d", trials)};
    if (!(render_frame(scene, cam, lit, p) == scene.full)) return {false, fmt("lit frame differs in trial %d", trials)};
  }
  return {true, fmt("%d random scenes, bit-exact", trials)};
}

Outcome gain_oracle(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const CameraConfig cam = default_camera();
  std::mt19937_64 rng(2);
  const std::array<int, 5> divisors{5, 10, 20, 25, 50};
  std::uniform_int_distribution<std::size_t> pick(0, divisors.size() - 1);
  std::uniform_int_distribution<std::size_t> row(0, cam.n_lines - 1);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int s = 0; s < 100; ++s) {
    // Sample edges on multiples of t_exp/1000 fall between midpoint nodes.
    const double dt = cam.t_exp / divisors[pick(rng)];
    const auto n = static_cast<std::size_t>(std::ceil(cam.t_cap() / dt)) + 1;
    const auto f = random_signal(n, dt, rng, Extension::none);
    for (int k = 0; k < 50; ++k) {
      const std::size_t v = row(rng);
      const Rgb g = scanline_gain(f, cam, v);
      const double start = static_cast<double>(v) * cam.t_ro;
      const double h = cam.t_exp / 1000.0;
      for (std::size_t c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int i = 0; i < 1000; ++i) {
          const double t = start + (i + 0.5) * h;
          sum += f.value(c, std::min(n - 1, static_cast<std::size_t>(t / dt)));
        }
        worst = std::max(worst, std::abs(g[c] - sum / 1000.0));
        ++checks;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, fmt("max |error| %.2e over %zu gains, %.2f s", worst, checks, secs)};
}

Outcome offset_law(Context&) {
  const CameraConfig cam = default_camera();
  // Primitive: a narrow pulse drifts by drift/t_ro rows per frame.
  const std::size_t n = grid_count(cam.t_cap(), cam.t_ro);
  FlickerSignal::Channels ch;
  for (auto& c : ch) {
    c.assign(n, 0.0);
    std::fill(c.begin() + 100, c.begin() + 110, 1.0);
  }
  ReplayPlan prim;
  prim.mode = ReplayMode::primitive;
  ReplayScheduler ps(cam, prim, FlickerSignal(ch, cam.t_cap() / static_cast<double>(n)), 1);
  const double per_frame = cam.drift() / cam.t_ro;
  double worst = 0.0;
  double c0 = 0.0;
  for (std::size_t k = 0; k < 30; ++k) {
    const auto g = row_gains(ps.advance(std::nullopt).waveform, cam, 0.0, cam.n_lines);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t v = 0; v < g.size(); ++v) {
      m0 += g[v][0];
      m1 += static_cast<double>(v) * g[v][0];
    }
    const double c = m1 / m0;
    if (k == 0) c0 = c;
    worst = std::max(worst, std::abs(c - c0 - static_cast<double>(k) * per_frame));
  }
  // Frequency-calibrated: identical frames of a static sign.
  ScenarioConfig cfg;
  const auto scene = sign_scene(kStop, 150, cfg.scene);
  ReplayPlan cal;
  cal.mode = ReplayMode::freq_calibrated;
  cal.delta0 = 2.345e-3;
  std::mt19937_64 rng(3);
  const double t_att0 = 150 * cam.t_ro + cam.t_exp;
  const std::size_t m = grid_count(t_att0, cam.t_ro);
  ReplayScheduler cs(cam, cal, random_signal(m, t_att0 / static_cast<double>(m), rng, Extension::none), 1);
  Image first;
  bool identical = true;
  for (std::size_t k = 0; k < 30; ++k) {
    const auto fr = cs.advance(SignReport{400, 150});
    const Image img = render_crop(scene, cam, fr.waveform, 399);
    if (k == 0) first = img;
    identical = identical && img == first;
  }
  return {worst <= 1.0 && identical,
          fmt("primitive drift %.3f rows/frame, worst centroid error %.3f rows; calibrated frames %s", per_frame,
              worst, identical ? "bit-identical" : "differ")};
}

Outcome window_algebra(Context&) {
  const ScenarioConfig cfg;
  const CameraConfig& cam = cfg.cam;
  const double y_t = cfg.sign.y_sign - cfg.tracker.y_cam;
  const auto states = simulate_trajectory(32.0, 10.0, cfg.speed, cam, y_t);
  double worst_sum = 0.0;
  double worst_row = 0.0;
  double worst_cont = 0.0;
  for (const auto& st : states) {
    const auto p = project_sign(cam, cfg.sign, st);
    const long top = round_half_up(p.n_up);
    const long rows = round_half_up(p.n_sign);
    const auto s = compute_windows(top + 1, rows, cam);
    worst_sum = std::max(worst_sum, std::abs(s.t_delay + s.t_att + s.t_calib - cam.t_frame()));
    // Pinhole ray trace of the sign's top and bottom edges.
    auto row_of = [&](double y) {
      return 0.5 * static_cast<double>(cam.n_lines) - cam.z_f * y / st.z_t * static_cast<double>(cam.n_lines) / cam.h_s;
    };
    const double top_o = row_of(y_t + 0.5 * cfg.sign.h_sign);
    const double bottom_o = row_of(y_t - 0.5 * cfg.sign.h_sign);
    worst_row = std::max({worst_row, std::abs(static_cast<double>(s.n_up - 1) - top_o),
                          std::abs(static_cast<double>(s.n_sign) - (bottom_o - top_o))});
    worst_cont = std::max({worst_cont, std::abs(p.n_up - top_o), std::abs(p.n_sign - (bottom_o - top_o))});
  }
  // Integer rows sit within half a row of the ray trace; 1e-9 absorbs ties at exactly .5.
  return {worst_sum <= 1e-12 && worst_row <= 0.5 + 1e-9,
          fmt("%zu frames, max window-sum error %.2e s, max row error %.3f (continuous %.2e)", states.size(),
              worst_sum, worst_row, worst_cont)};
}

Outcome projection_example(Context&) {
  const auto p = project_sign(default_camera(), SignGeometry{}, {20.0, 0.0, 0.0, 0.0});
  return {std::abs(p.n_sign - 180.2) <= 0.1, fmt("n_sign %.3f", p.n_sign)};
}

Outcome surrogate_fidelity(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  ctx.model = train(generate_dataset(SignDatasetSpec{}), TrainParams{}, 7);
  const double holdout = ctx.model->info().holdout_accuracy;
  const auto& cfg = ctx.cfg;
  const auto states = simulate_trajectory(cfg.start_z, cfg.end_z, cfg.speed, cfg.cam, cfg.sign.y_sign - cfg.tracker.y_cam);
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t cls = 0; cls < kSignClassCount; ++cls) {
    for (const auto& st : states) {
      const auto rows = static_cast<std::size_t>(round_half_up(project_sign(cfg.cam, cfg.sign, st).n_sign));
      const auto scene = sign_scene(cls, rows, cfg.scene);
      for (const Image* img : {&scene.amb, &scene.full}) {
        ++total;
        correct += classify_crop(*ctx.model, *img).cls == cls;
      }
    }
  }
  const double secs = seconds_since(t0);
  const double clean = static_cast<double>(correct) / static_cast<double>(total);
  return {holdout >= 0.95 && correct == total && secs < 120.0,
          fmt("held-out %.4f, clean trajectory crops %zu/%zu (%.4f), %.1f s", holdout, correct, total, clean, secs)};
}

Outcome gradient_correctness(Context& ctx) {
  if (!ctx.model) return {false, "no model"};
  const auto& model = *ctx.model;
  const double h = 1e-4;
  auto rel = [](double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
  };
  // Input gradient.
  auto spec = SignDatasetSpec{};
  spec.samples_per_class = 2;
  spec.seed = 5;
  const Dataset d = generate_dataset(spec);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> img_pick(0, d.size() - 1);
  std::uniform_int_distribution<std::size_t> px_pick(0, model.architecture().inputs() - 1);
  double worst_in = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t j = img_pick(rng);
    const std::size_t k = (d.labels[j] + 1 + static_cast<std::size_t>(i) % 7) % 8;
    const Image grad = model.input_gradient(d.images[j], k);
    double scale = 0.0;
    for (double g : grad.data()) scale = std::max(scale, std::abs(g));
    const std::size_t p = px_pick(rng);
    Image up = d.images[j];
    Image dn = d.images[j];
    up.data()[p] += h;
    dn.data()[p] -= h;
    const double fd = (model.loss(up, k) - model.loss(dn, k)) / (2 * h);
    worst_in = std::max(worst_in, rel(grad.data()[p], fd, 1e-3 * scale));
  }
  // Waveform gradient of the expected loss, both regimes.
  double worst_f = 0.0;
  for (const auto* s : {&*ctx.gs2, &*ctx.gs1}) {
    const std::size_t n = grid_count(s->t_att0, s->cam.t_ro);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::array<std::vector<double>, 3> ch;
    for (auto& c : ch) {
      c.resize(n);
      for (auto& v : c) v = u(rng);
    }
    const auto f = attack_signal(*s, ch[0], ch[1], ch[2]);
    const auto lg = expected_loss_gradient(f, *s, model);
    double scale = 0.0;
    for (const auto& c : lg.grad) {
      for (double g : c) scale = std::max(scale, std::abs(g));
    }
    std::uniform_int_distribution<std::size_t> sp(0, n - 1);
    std::uniform_int_distribution<std::size_t> cp(0, 2);
    for (int i = 0; i < 50; ++i) {
      const std::size_t c = cp(rng);
      const std::size_t k = sp(rng);
      auto up = ch;
      auto dn = ch;
      up[c][k] += h;
      dn[c][k] -= h;
      const double fd = (expected_loss(attack_signal(*s, up[0], up[1], up[2]), *s, model) -
                         expected_loss(attack_signal(*s, dn[0], dn[1], dn[2]), *s, model)) /
                        (2 * h);
      worst_f = std::max(worst_f, rel(lg.grad[c][k], fd, 1e-3 * scale));
    }
  }
  return {worst_in <= 1e-3 && worst_f <= 1e-3,
          fmt("max relative error: input %.2e (100 coords), waveform %.2e (100 coords)", worst_in, worst_f)};
}

Outcome whitebox_attack(Context& ctx) {
  if (!ctx.model) return {false, "no model"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = optimize_pgd(*ctx.gs2, *ctx.model, attack_pgd(), 1);
  ctx.gs2_signal = r.signal;
  const double secs = seconds_since(t0);
  return {r.success_rate == 1.0 && secs < 300.0,
          fmt("stop -> no_entry success %.2f over %zu offsets, loss %.4f, %zu iterations, %.1f s", r.success_rate,
              ctx.gs2->phi_samples, r.loss, r.iterations, secs)};
}

Outcome blackbox_attack(Context& ctx) {
  if (!ctx.model) return {false, "no model"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t q_min = 5;
  const std::size_t q_max = 10;
  const std::size_t per_q = 3000 / (q_max - q_min + 1);
  const auto sweep = sweep_q(*ctx.gs2, *ctx.model, q_min, q_max, per_q, 1);
  std::size_t queries = 0;
  std::string rates;
  double best = 0.0;
  for (std::size_t i = 0; i < sweep.per_q.size(); ++i) {
    queries += sweep.per_q[i].queries;
    best = std::max(best, sweep.per_q[i].success_rate);
    rates += fmt("%sq=%zu:%.2f", i ? " " : "", q_min + i, sweep.per_q[i].success_rate);
  }
  const double secs = seconds_since(t0);
  return {best >= 0.8 && queries <= 3000,
          fmt("best success %.2f with %zu queries in total (%s), %.1f s", best, queries, rates.c_str(), secs)};
}

Outcome end_to_end(Context& ctx) {
  if (!ctx.model || !ctx.gs2_signal) return {false, "missing model or signal"};
  const auto t0 = std::chrono::steady_clock::now();
  ctx.gs1_signal = optimize_pgd(*ctx.gs1, *ctx.model, attack_pgd(), 1).signal;
  ScenarioConfig cfg = ctx.cfg;
  const AttackSignal g2{*ctx.gs2_signal, ctx.gs2->t_att0, ctx.gs2->n_sign0, {}};
  const AttackSignal g1{*ctx.gs1_signal, ctx.gs1->t_att0, ctx.gs1->n_sign0, {}};
  cfg.mode_signals[AttackMode::gs2] = g2;
  cfg.mode_signals[AttackMode::gs1] = g1;
  cfg.mode_signals[AttackMode::primitive] = g1;
  const std::array modes{AttackMode::random, AttackMode::primitive, AttackMode::gs1, AttackMode::gs2};
  const auto cmp = compare_modes(cfg, modes, 10, *ctx.model);
  const auto& r = cmp.modes[0];
  const auto& p = cmp.modes[1];
  const auto& g1s = cmp.modes[2];
  const auto& g2s = cmp.modes[3];
  const bool pmcr_order = g2s.mean_pmcr > g1s.mean_pmcr && g1s.mean_pmcr > p.mean_pmcr &&
                          p.mean_pmcr > r.mean_pmcr && r.mean_pmcr <= 0.01;
  const bool entropy_order = g2s.mean_entropy <= g1s.mean_entropy && g1s.mean_entropy < p.mean_entropy;
  const double secs = seconds_since(t0);
  return {pmcr_order && entropy_order && secs < 600.0,
          fmt("10 trials; PMCR gs2 %.3f > gs1 %.3f > primitive %.3f > random %.3f; entropy gs2 %.3f <= gs1 %.3f < "
              "primitive %.3f bits; %.1f s",
              g2s.mean_pmcr, g1s.mean_pmcr, p.mean_pmcr, r.mean_pmcr, g2s.mean_entropy, g1s.mean_entropy,
              p.mean_entropy, secs)};
}

Outcome sniffer(Context&) {
  std::string detail;
  bool ok = true;
  std::size_t hits = 0, spikes = 0, truth = 0;
  for (double fps : {10.0, 29.0, 30.0}) {
    CameraConfig cam = default_camera();
    cam.frame_rate = fps;
    TraceParams tp;
    tp.duration = 10.0;
    tp.noise_sd = 0.1;  // SNR 10
    tp.seed = static_cast<std::uint64_t>(fps) + 100;
    const auto tr = synthesize_trace(cam, tp);
    DetectorParams dp;
    dp.frame_rate = fps;
    const auto det = detect_spikes(tr, dp);
    std::vector<bool> used(tr.moments.size(), false);
    std::size_t h = 0;
    for (double t : det) {
      for (std::size_t i = 0; i < tr.moments.size(); ++i) {
        if (!used[i] && std::abs(t - tr.moments[i]) <= 2.0 / tp.sample_rate) {
          used[i] = true;
          ++h;
          break;
        }
      }
    }
    hits += h;
    spikes += det.size();
    truth += tr.moments.size();
    const double est = estimate_frame_rate(tr);
    ok = ok && std::abs(est - fps) <= 0.1;
    detail += fmt("%g fps -> %.4f Hz; ", fps, est);
  }
  const double precision = static_cast<double>(hits) / static_cast<double>(spikes);
  const double recall = static_cast<double>(hits) / static_cast<double>(truth);
  ok = ok && precision == 1.0 && recall == 1.0;

  SimulatedCamera first;
  first.cam = default_camera();
  first.spike_lead = 3 * first.cam.t_ro;
  first.seed = 11;
  const std::vector<long> grid{21, 121, 221, 321, 421, 521, 621};
  const auto map = calibrate_delay_mapping(first, grid);
  double worst = 0.0;
  for (int eps = 0; eps <= 6; ++eps) {
    SimulatedCamera second = first;
    second.spike_lead += eps * first.cam.t_ro;
    second.seed = 200 + static_cast<std::uint64_t>(eps);
    for (double want : {100.0, 300.0, 500.0, 700.0, 900.0}) {
      auto rows = observe_top_rows(second, map.t_set_for(want));
      std::sort(rows.begin(), rows.end());
      worst = std::max(worst, std::abs(static_cast<double>(rows[rows.size() / 2]) - want));
    }
  }
  ok = ok && worst <= 6.0;
  detail += fmt("precision %.3f recall %.3f; delay map a=%.4f b=%.3f, worst cross-camera error %.0f rows", precision,
                recall, map.a, map.b, worst);
  return {ok, detail};
}

Outcome determinism(Context& ctx) {
  if (!ctx.model || !ctx.gs2_signal || !ctx.gs1_signal) return {false, "missing model or signals"};
  ScenarioConfig cfg = ctx.cfg;
  cfg.mode_signals[AttackMode::gs2] = {*ctx.gs2_signal, ctx.gs2->t_att0, ctx.gs2->n_sign0, {}};
  cfg.mode_signals[AttackMode::gs2_still] = cfg.mode_signals[AttackMode::gs2];
  cfg.mode_signals[AttackMode::gs1] = {*ctx.gs1_signal, ctx.gs1->t_att0, ctx.gs1->n_sign0, {}};
  cfg.mode_signals[AttackMode::primitive] = cfg.mode_signals[AttackMode::gs1];
  cfg.seed = 5;
  std::size_t compared = 0;
  for (auto mode : {AttackMode::random, AttackMode::primitive, AttackMode::gs1, AttackMode::gs2, AttackMode::gs2_still}) {
    cfg.mode = mode;
    std::ostringstream a, b;
    write_run_csv(a, run_scenario(cfg, *ctx.model));
    write_run_csv(b, run_scenario(cfg, *ctx.model));
    if (a.str() != b.str()) return {false, fmt("run CSV differs for mode %s", std::string(mode_name(mode)).c_str())};
    ++compared;
  }
  const std::array modes{AttackMode::gs1, AttackMode::gs2};
  std::ostringstream c1, c2;
  write_comparison_csv(c1, compare_modes(cfg, modes, 2, *ctx.model));
  write_comparison_csv(c2, compare_modes(cfg, modes, 2, *ctx.model));
  if (c1.str() != c2.str()) return {false, "comparison CSV differs"};
  const auto again = optimize_pgd(*ctx.gs2, *ctx.model, attack_pgd(), 1).signal;
  if (!(again == *ctx.gs2_signal)) return {false, "PGD signal differs between runs"};
  return {true, fmt("%zu run CSVs, comparison CSV and optimised signal byte-identical", compared)};
}

}  // namespace

int main() {
  Context ctx;
  ctx.cfg.ground_truth = kStop;
  ctx.cfg.target = kNoEntry;
  ctx.cfg.still_distance = 21.0;
  const std::size_t rows = design_rows(ctx.cfg);
  const auto scene = sign_scene(kStop, rows, ctx.cfg.scene);
  ctx.gs2 = AttackObjectiveSpec::phase_synced(scene, ctx.cfg.planning_camera(), kStop, kNoEntry);
  ctx.gs1 = AttackObjectiveSpec::freq_calibrated(scene, ctx.cfg.planning_camera(), kStop);

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria{
      {"renderer identities", renderer_identities},
      {"gain oracle", gain_oracle},
      {"offset law", offset_law},
      {"window algebra", window_algebra},
      {"projection example", projection_example},
      {"surrogate fidelity", surrogate_fidelity},
      {"gradient correctness", gradient_correctness},
      {"white-box targeted attack", whitebox_attack},
      {"black-box attack", blackbox_attack},
      {"end-to-end orderings", end_to_end},
      {"sniffer", sniffer},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
