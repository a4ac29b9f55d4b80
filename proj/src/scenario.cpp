#include "stripeforge/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "stripeforge/error.hpp"
#include "stripeforge/image_io.hpp"
#include "stripeforge/signs.hpp"
#include "stripeforge/timing.hpp"

namespace stripeforge {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<AttackMode, std::string_view>, 5> kModes{{
    {AttackMode::random, "random"},
    {AttackMode::primitive, "primitive"},
    {AttackMode::gs1, "gs1"},
    {AttackMode::gs2, "gs2"},
    {AttackMode::gs2_still, "gs2-still"},
}};

void check_keys(const json& obj, std::string_view block, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(block) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(block));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

Rgb read_rgb(const json& v, const char* key) {
  try {
    if (v.is_number()) {
      const double x = v.get<double>();
      return {x, x, x};
    }
    const auto a = v.get<std::vector<double>>();
    if (a.size() == 3) return {a[0], a[1], a[2]};
  } catch (const json::exception&) {
  }
  throw ConfigError(std::string("'") + key + "' must be a number or a 3-element array");
}

std::size_t read_class(const json& v) {
  if (v.is_number_integer()) {
    const auto idx = v.get<long long>();
    if (idx < 0 || idx >= static_cast<long long>(kSignClassCount)) throw ConfigError("sign class index out of range");
    return static_cast<std::size_t>(idx);
  }
  if (v.is_string()) return parse_sign_class(v.get<std::string>());
  throw ConfigError("sign class must be a name or an index");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string fmt(const char* format, auto... args) {
  std::array<char, 256> buf{};
  std::snprintf(buf.data(), buf.size(), format, args...);
  return buf.data();
}

}  // namespace

std::string_view mode_name(AttackMode mode) {
  for (const auto& [m, name] : kModes) {
    if (m == mode) return name;
  }
  return "unknown";
}

AttackMode parse_mode(std::string_view name) {
  for (const auto& [m, n] : kModes) {
    if (n == name) return m;
  }
  throw ConfigError("unknown attack mode '" + std::string(name) + "'");
}

bool is_targeted(AttackMode mode) { return mode == AttackMode::gs2 || mode == AttackMode::gs2_still; }

void save_signal(const std::filesystem::path& path, const AttackSignal& s) {
  json doc;
  doc["sample_dt_us"] = s.f0.sample_dt() * 1e6;
  doc["t_att0_us"] = s.t_att0 * 1e6;
  doc["n_sign0"] = s.n_sign0;
  doc["extension"] = s.f0.extension() == Extension::periodic ? "periodic"
                     : s.f0.extension() == Extension::zero   ? "zero"
                                                             : "none";
  const std::array<const char*, 3> names{"r", "g", "b"};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto ch = s.f0.channel(c);
    doc[names[c]] = std::vector<double>(ch.begin(), ch.end());
  }
  doc["metadata"] = s.metadata;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << doc.dump(1) << "\n";
}

AttackSignal load_signal(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open signal file " + path.string());
  AttackSignal s;
  try {
    const json doc = json::parse(is);
    const double dt = doc.at("sample_dt_us").get<double>() / 1e6;
    s.t_att0 = doc.at("t_att0_us").get<double>() / 1e6;
    s.n_sign0 = doc.at("n_sign0").get<std::size_t>();
    const std::string ext = doc.value("extension", "none");
    Extension e = Extension::none;
    if (ext == "periodic") {
      e = Extension::periodic;
    } else if (ext == "zero") {
      e = Extension::zero;
    } else if (ext != "none") {
      throw ConfigError(path.string() + ": unknown extension '" + ext + "'");
    }
    FlickerSignal::Channels ch{doc.at("r").get<std::vector<double>>(), doc.at("g").get<std::vector<double>>(),
                               doc.at("b").get<std::vector<double>>()};
    s.f0 = FlickerSignal(std::move(ch), dt, e);
    if (doc.contains("metadata")) s.metadata = doc.at("metadata");
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (std::abs(s.f0.duration() - s.t_att0) > 1e-9) {
    throw ConfigError(path.string() + ": signal duration differs from t_att0_us");
  }
  return s;
}

RadiometricScene sign_scene(std::size_t cls, std::size_t side, const SceneConfig& scene) {
  return RadiometricScene::from_texture(sign_texture(cls, side), scene.params());
}

CameraConfig ScenarioConfig::planning_camera() const {
  CameraConfig c = cam;
  c.t_exp = t_exp_planned;
  return c;
}

const AttackSignal* ScenarioConfig::signal_for(AttackMode m) const {
  const auto it = mode_signals.find(m);
  if (it != mode_signals.end()) return &it->second;
  return signal ? &*signal : nullptr;
}

void ScenarioConfig::validate() const {
  cam.validate();
  planning_camera().validate();
  if (!(sign.h_sign > 0.0)) throw ConfigError("sign height must be positive");
  if (tracker.d1 < 0.0 || tracker.d2 < 0.0 || tracker.range_noise_sd < 0.0) {
    throw ConfigError("tracker distances and noise must be non-negative");
  }
  if (!(start_z > end_z && end_z > 0.0)) throw ConfigError("trajectory needs start_z > end_z > 0");
  if (!(speed > 0.0)) throw ConfigError("speed must be positive");
  if (ground_truth >= kSignClassCount) throw ConfigError("ground-truth class out of range");
  if (jitter_sd < 0.0) throw ConfigError("jitter must be non-negative");
  if (scene.rho_texp < 0.0 || scene.ref_z <= 0.0) throw ConfigError("invalid scene parameters");
  if (mode != AttackMode::random && !signal_for(mode)) {
    throw ConfigError(std::string("mode ") + std::string(mode_name(mode)) + " needs an attack signal");
  }
  if (is_targeted(mode) && !target) throw ConfigError("targeted modes need a target class");
  if (target && *target == ground_truth) throw ConfigError("target equals the ground truth");
  if (mode == AttackMode::gs2_still && !still_distance) throw ConfigError("gs2-still needs still_distance_m");
  if (still_distance && !(*still_distance > 0.0)) throw ConfigError("still_distance_m must be positive");
  if (random_q < 1 || random_q > 16) throw ConfigError("random_q must be in [1, 16]");
}

ScenarioConfig parse_scenario(const json& doc, const std::filesystem::path& base_dir, bool load_signals) {
  check_keys(doc, "scenario",
             {"seed", "mode", "camera", "geometry", "tracker", "timing", "scene", "sign", "attack", "model", "output"});
  ScenarioConfig cfg;
  read(doc, "seed", cfg.seed);
  if (doc.contains("mode")) cfg.mode = parse_mode(doc.at("mode").get<std::string>());

  if (doc.contains("camera")) {
    const auto& c = doc.at("camera");
    check_keys(c, "camera", {"fps", "t_ro_us", "t_exp_us", "t_exp_planned_us", "t_exp_actual_us", "cols"});
    read(c, "fps", cfg.cam.frame_rate);
    double v = cfg.cam.t_ro * 1e6;
    read(c, "t_ro_us", v);
    cfg.cam.t_ro = v * 1e-6;
    v = cfg.cam.t_exp * 1e6;
    read(c, "t_exp_us", v);
    cfg.cam.t_exp = v * 1e-6;
    cfg.t_exp_planned = cfg.cam.t_exp;
    if (c.contains("t_exp_planned_us")) cfg.t_exp_planned = c.at("t_exp_planned_us").get<double>() * 1e-6;
    if (c.contains("t_exp_actual_us")) cfg.cam.t_exp = c.at("t_exp_actual_us").get<double>() * 1e-6;
    read(c, "cols", cfg.cam.n_cols);
  }
  if (doc.contains("geometry")) {
    const auto& g = doc.at("geometry");
    check_keys(g, "geometry",
               {"focal_mm", "sensor_h_mm", "lines", "sign_h_m", "sign_alt_m", "cam_alt_m", "d1_m", "d2_m",
                "pitch_deg", "start_z_m", "end_z_m", "speed_kmh"});
    double v = cfg.cam.z_f * 1e3;
    read(g, "focal_mm", v);
    cfg.cam.z_f = v * 1e-3;
    v = cfg.cam.h_s * 1e3;
    read(g, "sensor_h_mm", v);
    cfg.cam.h_s = v * 1e-3;
    read(g, "lines", cfg.cam.n_lines);
    read(g, "sign_h_m", cfg.sign.h_sign);
    read(g, "sign_alt_m", cfg.sign.y_sign);
    read(g, "cam_alt_m", cfg.tracker.y_cam);
    read(g, "d1_m", cfg.tracker.d1);
    read(g, "d2_m", cfg.tracker.d2);
    read(g, "pitch_deg", cfg.cam.pitch_deg);
    read(g, "start_z_m", cfg.start_z);
    read(g, "end_z_m", cfg.end_z);
    double kmh = cfg.speed * 3.6;
    read(g, "speed_kmh", kmh);
    cfg.speed = kmh / 3.6;
  }
  if (doc.contains("tracker")) {
    const auto& t = doc.at("tracker");
    check_keys(t, "tracker", {"range_noise_sd_m"});
    read(t, "range_noise_sd_m", cfg.tracker.range_noise_sd);
  }
  if (doc.contains("timing")) {
    const auto& t = doc.at("timing");
    check_keys(t, "timing", {"jitter_us", "latency_frames", "fill_windows", "still_distance_m"});
    double j = cfg.jitter_sd * 1e6;
    read(t, "jitter_us", j);
    cfg.jitter_sd = j * 1e-6;
    read(t, "latency_frames", cfg.latency_frames);
    read(t, "fill_windows", cfg.fill_windows);
    if (t.contains("still_distance_m")) cfg.still_distance = t.at("still_distance_m").get<double>();
  }
  if (doc.contains("scene")) {
    const auto& s = doc.at("scene");
    check_keys(s, "scene", {"alpha", "beta", "rho_texp", "attenuation_exponent", "ref_z_m"});
    if (s.contains("alpha")) cfg.scene.alpha = read_rgb(s.at("alpha"), "alpha");
    if (s.contains("beta")) cfg.scene.beta = read_rgb(s.at("beta"), "beta");
    read(s, "rho_texp", cfg.scene.rho_texp);
    read(s, "attenuation_exponent", cfg.scene.attenuation_exponent);
    read(s, "ref_z_m", cfg.scene.ref_z);
  }
  if (doc.contains("sign")) {
    const auto& s = doc.at("sign");
    check_keys(s, "sign", {"class", "target"});
    if (s.contains("class")) cfg.ground_truth = read_class(s.at("class"));
    if (s.contains("target")) cfg.target = read_class(s.at("target"));
  }
  if (doc.contains("attack")) {
    const auto& a = doc.at("attack");
    check_keys(a, "attack", {"signal", "signals", "random_q"});
    if (a.contains("signal") && load_signals) cfg.signal = load_signal(resolve(base_dir, a.at("signal").get<std::string>()));
    if (a.contains("signals")) {
      if (!a.at("signals").is_object()) throw ConfigError("attack.signals must map modes to files");
      for (const auto& [mode, file] : a.at("signals").items()) {
        const AttackMode m = parse_mode(mode);
        if (load_signals) cfg.mode_signals[m] = load_signal(resolve(base_dir, file.get<std::string>()));
      }
    }
    read(a, "random_q", cfg.random_q);
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    check_keys(m, "model", {"path"});
    if (m.contains("path")) cfg.model_path = resolve(base_dir, m.at("path").get<std::string>());
  }
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    check_keys(o, "output", {"csv", "frames_dir"});
    if (o.contains("csv")) cfg.csv_path = resolve(base_dir, o.at("csv").get<std::string>());
    if (o.contains("frames_dir")) cfg.frames_dir = resolve(base_dir, o.at("frames_dir").get<std::string>());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path, bool load_signals) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_scenario(doc, path.parent_path(), load_signals);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

AttackRun run_scenario(const ScenarioConfig& cfg, const SurrogateModel& model) {
  cfg.validate();
  const CameraConfig& cam = cfg.cam;
  const double y_t = cfg.sign.y_sign - cfg.tracker.y_cam;
  const auto states = simulate_trajectory(cfg.start_z, cfg.end_z, cfg.speed, cam, y_t);

  AttackRun run;
  run.mode = cfg.mode;
  run.ground_truth = cfg.ground_truth;
  run.target = is_targeted(cfg.mode) ? cfg.target : std::nullopt;
  run.frame_rate = cam.frame_rate;

  auto stream = [&cfg](std::uint64_t tag) {
    std::seed_seq seq{cfg.seed & 0xffffffffu, cfg.seed >> 32, tag};
    return std::mt19937_64(seq);
  };
  std::mt19937_64 tracker_rng = stream(0x7a11);
  std::mt19937_64 random_rng = stream(0x5a4d);
  std::mt19937_64 offset_rng = stream(0xde17);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::optional<ReplayScheduler> scheduler;
  if (cfg.mode != AttackMode::random) {
    ReplayPlan plan;
    plan.seed = cfg.seed;
    plan.fill_windows = cfg.fill_windows;
    switch (cfg.mode) {
      case AttackMode::primitive:
        plan.mode = ReplayMode::primitive;
        plan.delta0 = (unit(offset_rng) - 0.5) * cam.t_frame();
        break;
      case AttackMode::gs1:
        plan.mode = ReplayMode::freq_calibrated;
        plan.delta0 = (unit(offset_rng) - 0.5) * cam.t_frame();
        break;
      default:
        plan.mode = ReplayMode::phase_synced;
        plan.jitter_sd = cfg.jitter_sd;
        break;
    }
    scheduler.emplace(cam, plan, cfg.signal_for(cfg.mode)->f0, cfg.latency_frames);
  }

  std::optional<SignReport> still_report;
  if (cfg.mode == AttackMode::gs2_still) {
    const auto p = project_sign(cam, cfg.sign, {*cfg.still_distance, y_t, 0.0, 0.0});
    still_report = SignReport{round_half_up(p.n_up) + 1, std::max(1L, round_half_up(p.n_sign))};
  }

  if (!cfg.frames_dir.empty()) std::filesystem::create_directories(cfg.frames_dir);

  for (std::size_t n = 0; n < states.size(); ++n) {
    const auto& st = states[n];
    FrameRecord rec;
    rec.frame = n;
    rec.t = st.t;
    rec.z = st.z_t;
    rec.gt = cfg.ground_truth;

    const auto truth = project_sign(cam, cfg.sign, st);
    const long top = round_half_up(truth.n_up);
    const long rows = std::max(1L, round_half_up(truth.n_sign));
    rec.n_up = top + 1;
    rec.n_sign = rows;

    const double d_est = std::max(0.0, st.z_t - cfg.tracker.d1 - cfg.tracker.d2);
    const auto est = tracker_estimate(cfg.tracker, cfg.sign, d_est, tracker_rng);
    std::optional<SignReport> report = still_report;
    if (!report && est.z_t > 0.0) {
      const auto p = project_sign(cam, cfg.sign, {est.z_t, est.y_t, st.speed, st.t});
      if (p.visibility == Visibility::full) {
        report = SignReport{round_half_up(p.n_up) + 1, std::max(1L, round_half_up(p.n_sign))};
      }
    }

    std::optional<ReplayScheduler::Frame> replay;
    bool oversized = false;
    if (scheduler) {
      try {
        replay = scheduler->advance(report);
        rec.delta = replay->schedule.delta;
      } catch (const WindowOverflowError&) {
        oversized = true;
      } catch (const DomainError&) {
        oversized = true;
      }
    }

    const bool visible = truth.visibility == Visibility::full && top >= 0 &&
                         static_cast<std::size_t>(top + rows) <= cam.n_lines;
    if (!visible) {
      ++run.not_visible;
      run.records.push_back(rec);
      continue;
    }
    if (oversized) {
      ++run.oversized;
      run.records.push_back(rec);
      continue;
    }

    RadiometricScene scene = sign_scene(cfg.ground_truth, static_cast<std::size_t>(rows), cfg.scene);
    if (cfg.scene.attenuation_exponent != 0.0) {
      scene = scene.attenuated(std::min(1.0, std::pow(cfg.scene.ref_z / st.z_t, cfg.scene.attenuation_exponent)));
    }

    std::vector<Rgb> gains;
    if (cfg.mode == AttackMode::random) {
      const double span = static_cast<double>(rows) * cam.t_ro + cam.t_exp;
      FlickerSignal::Channels ch;
      for (auto& c : ch) {
        c.resize(cfg.random_q);
        for (auto& v : c) v = unit(random_rng);
      }
      const FlickerSignal f(std::move(ch), span / static_cast<double>(cfg.random_q), Extension::periodic);
      rec.delta = unit(random_rng) * span;
      gains = row_gains(f, cam, rec.delta / cam.t_ro, static_cast<std::size_t>(rows));
    } else {
      gains = row_gains(replay->waveform, cam, static_cast<double>(top), static_cast<std::size_t>(rows));
    }
    const Image crop = compose(scene, gains);
    const Prediction pred = classify_crop(model, crop);
    rec.pred = static_cast<int>(pred.cls);
    rec.conf = pred.confidence();
    if (!cfg.frames_dir.empty()) write_ppm(cfg.frames_dir / fmt("crop_%04zu.ppm", n), crop);
    run.records.push_back(rec);
  }
  if (run.evaluated() == 0) throw NotVisibleError("the sign is never fully visible on the trajectory");
  return run;
}

double misclassification_rate(const AttackRun& run) {
  std::size_t wrong = 0, total = 0;
  for (const auto& r : run.records) {
    if (r.excluded()) continue;
    ++total;
    wrong += static_cast<std::size_t>(r.pred) != r.gt;
  }
  return total ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
}

PrimaryRate pmcr(const AttackRun& run, std::optional<std::size_t> target) {
  std::map<std::size_t, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& r : run.records) {
    if (r.excluded()) continue;
    ++total;
    const auto p = static_cast<std::size_t>(r.pred);
    if (p != r.gt) ++counts[p];
  }
  PrimaryRate out;
  if (total == 0) return out;
  if (target) {
    out.cls = *target;
    out.rate = static_cast<double>(counts[*target]) / static_cast<double>(total);
    return out;
  }
  std::size_t best = 0;
  for (const auto& [cls, count] : counts) {
    if (count > best) {  // map order makes the lowest index win ties
      best = count;
      out.cls = cls;
    }
  }
  out.rate = static_cast<double>(best) / static_cast<double>(total);
  return out;
}

PrimaryRate pmcr(const AttackRun& run) { return pmcr(run, run.target); }

std::vector<double> windowed_entropy(const AttackRun& run, double window_s) {
  const auto w = static_cast<std::size_t>(std::max(1L, round_half_up(window_s * run.frame_rate)));
  std::vector<double> out;
  for (std::size_t start = 0; start < run.records.size(); start += w) {
    std::map<int, std::size_t> counts;
    std::size_t total = 0;
    for (std::size_t i = start; i < std::min(run.records.size(), start + w); ++i) {
      if (run.records[i].excluded()) continue;
      ++counts[run.records[i].pred];
      ++total;
    }
    if (total == 0 || 2 * total < w) continue;
    double h = 0.0;
    for (const auto& [cls, c] : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log2(p);
    }
    out.push_back(h + 0.0);
  }
  return out;
}

double mean_entropy(const AttackRun& run, double window_s) { return mean(windowed_entropy(run, window_s)); }

std::vector<DistanceBin> distance_profile(const AttackRun& run, double bin_m) {
  if (!(bin_m > 0.0)) throw DomainError("bin width must be positive");
  if (run.records.empty()) return {};
  double z_min = run.records.front().z, z_max = z_min;
  for (const auto& r : run.records) {
    z_min = std::min(z_min, r.z);
    z_max = std::max(z_max, r.z);
  }
  const auto nbins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((z_max - z_min) / bin_m - 1e-9)));
  std::vector<DistanceBin> bins(nbins);
  for (std::size_t i = 0; i < nbins; ++i) {
    bins[i].z_lo = z_min + static_cast<double>(i) * bin_m;
    bins[i].z_hi = bins[i].z_lo + bin_m;
  }
  const auto primary = pmcr(run).cls;
  std::vector<std::size_t> wrong(nbins, 0), hits(nbins, 0);
  for (const auto& r : run.records) {
    const auto i = std::min(nbins - 1, static_cast<std::size_t>((r.z - z_min) / bin_m));
    ++bins[i].frames;
    if (r.excluded()) continue;
    ++bins[i].evaluated;
    const auto p = static_cast<std::size_t>(r.pred);
    wrong[i] += p != r.gt;
    hits[i] += primary && p == *primary && p != r.gt;
  }
  for (std::size_t i = 0; i < nbins; ++i) {
    if (bins[i].evaluated == 0) continue;
    bins[i].mr = static_cast<double>(wrong[i]) / static_cast<double>(bins[i].evaluated);
    bins[i].pmcr = static_cast<double>(hits[i]) / static_cast<double>(bins[i].evaluated);
  }
  return bins;
}

TrialSummary summarize(const AttackRun& run, std::size_t trial, std::uint64_t seed) {
  TrialSummary s;
  s.mode = run.mode;
  s.trial = trial;
  s.seed = seed;
  s.frames = run.records.size();
  s.excluded = run.records.size() - run.evaluated();
  s.mr = misclassification_rate(run);
  const auto p = pmcr(run);
  s.pmcr = p.rate;
  s.primary = p.cls;
  s.entropy = mean_entropy(run);
  return s;
}

Comparison compare_modes(const ScenarioConfig& base, std::span<const AttackMode> modes, std::size_t trials,
                         const SurrogateModel& model) {
  if (trials == 0) throw ConfigError("need at least one trial per mode");
  Comparison cmp;
  for (AttackMode mode : modes) {
    std::vector<double> mr, pm, ent;
    for (std::size_t i = 0; i < trials; ++i) {
      ScenarioConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = base.seed + i;
      cfg.frames_dir.clear();
      const auto s = summarize(run_scenario(cfg, model), i, cfg.seed);
      mr.push_back(s.mr);
      pm.push_back(s.pmcr);
      ent.push_back(s.entropy);
      cmp.trials.push_back(s);
    }
    cmp.modes.push_back({mode, trials, mean(mr), median(mr), mean(pm), median(pm), mean(ent)});
  }
  return cmp;
}

void write_run_csv(std::ostream& os, const AttackRun& run) {
  os << "frame,t_s,z_m,n_up,n_sign,delta_us,pred,gt,conf\n";
  for (const auto& r : run.records) {
    os << fmt("%zu,%.6f,%.4f,%ld,%ld,%.3f,%d,%zu,%.6f\n", r.frame, r.t, r.z, r.n_up, r.n_sign, r.delta * 1e6, r.pred,
              r.gt, r.conf);
  }
}

void write_run_csv(const std::filesystem::path& path, const AttackRun& run) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  write_run_csv(os, run);
}

void write_comparison_csv(std::ostream& os, const Comparison& cmp) {
  os << "mode,trial,seed,frames,excluded,mr,pmcr,primary,entropy\n";
  for (const auto& t : cmp.trials) {
    os << fmt("%s,%zu,%llu,%zu,%zu,%.6f,%.6f,%d,%.6f\n", std::string(mode_name(t.mode)).c_str(), t.trial,
              static_cast<unsigned long long>(t.seed), t.frames, t.excluded, t.mr, t.pmcr,
              t.primary ? static_cast<int>(*t.primary) : -1, t.entropy);
  }
  for (const auto& m : cmp.modes) {
    os << fmt("%s,mean,,,,%.6f,%.6f,,%.6f\n", std::string(mode_name(m.mode)).c_str(), m.mean_mr, m.mean_pmcr,
              m.mean_entropy);
    os << fmt("%s,median,,,,%.6f,%.6f,,\n", std::string(mode_name(m.mode)).c_str(), m.median_mr, m.median_pmcr);
  }
}

void write_profile_csv(std::ostream& os, std::span<const DistanceBin> bins) {
  os << "z_lo_m,z_hi_m,frames,evaluated,mr,pmcr\n";
  for (const auto& b : bins) {
    os << fmt("%.3f,%.3f,%zu,%zu,%.6f,%.6f\n", b.z_lo, b.z_hi, b.frames, b.evaluated, b.mr, b.pmcr);
  }
}

}  // namespace stripeforge
