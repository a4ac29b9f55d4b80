// Command-line front end: render, train, optimize, simulate, compare,
// trace and sniff.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stripeforge/attack.hpp"
#include "stripeforge/error.hpp"
#include "stripeforge/geometry.hpp"
#include "stripeforge/image_io.hpp"
#include "stripeforge/scenario.hpp"
#include "stripeforge/signs.hpp"
#include "stripeforge/sniffer.hpp"

namespace sf = stripeforge;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

sf::SurrogateModel obtain_model(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return sf::SurrogateModel::load(path);
  std::cerr << "no model given, training the default surrogate (seed " << seed << ")\n";
  auto model = sf::train(sf::generate_dataset(sf::SignDatasetSpec{}), sf::TrainParams{}, seed);
  if (!model.info().converged) throw sf::TrainingError("default surrogate did not reach the target accuracy");
  return model;
}

sf::RadiometricScene load_scene(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") return sf::read_scene_bin(path);
  return sf::read_scene_ppm(path);
}

std::vector<sf::AttackMode> parse_modes(const std::string& list) {
  std::vector<sf::AttackMode> modes;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) modes.push_back(sf::parse_mode(item));
  }
  if (modes.empty()) throw sf::ConfigError("no modes given");
  return modes;
}

sf::CurrentTrace load_trace(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return sf::read_trace_csv(path);
  return sf::read_trace_f32(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rolling-shutter adversarial stripe simulator"};
  app.require_subcommand(1);

  // render
  auto* render = app.add_subcommand("render", "render a scene under a flicker signal");
  std::string scene_path, sign_name, signal_path, render_out;
  std::size_t side = 113, top_row = 0;
  double phi = 0.0;
  render->add_option("--scene", scene_path, "scene triplet: <stem> of PPM files or an RSEIMG1 .bin");
  render->add_option("--sign", sign_name, "synthesise a sign crop of this class instead");
  render->add_option("--side", side, "side of the synthesised crop in pixels");
  render->add_option("--signal", signal_path, "signal JSON (omit for a dark LED)");
  render->add_option("--top-row", top_row, "absolute scanline of the crop's first row");
  render->add_option("--phi", phi, "extra scanline offset");
  render->add_option("--out", render_out, "output PPM")->required();

  // train
  auto* train = app.add_subcommand("train", "train the surrogate classifier");
  std::string model_out;
  std::uint64_t train_seed = 7;
  std::size_t epochs = sf::TrainParams{}.epochs;
  train->add_option("--out", model_out, "model file (SGM1)")->required();
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--epochs", epochs, "training epochs");

  // optimize
  auto* optimize = app.add_subcommand("optimize", "optimise an attack signal offline");
  std::string opt_mode = "gs2", opt_attack = "whitebox", opt_target, opt_config, opt_out, opt_model;
  std::size_t steps = 200, budget = 3000, q_min = 5, q_max = 10;
  double step_size = 0.1;
  std::uint64_t opt_seed = 1;
  optimize->add_option("--mode", opt_mode, "gs1 (untargeted, wide offset) or gs2 (targeted, narrow offset)")
      ->check(CLI::IsMember({"gs1", "gs2"}));
  optimize->add_option("--attack", opt_attack, "whitebox (PGD) or blackbox (BO)")
      ->check(CLI::IsMember({"whitebox", "blackbox"}));
  optimize->add_option("--target", opt_target, "target class for gs2");
  optimize->add_option("--config", opt_config, "scenario JSON")->required();
  optimize->add_option("--out", opt_out, "signal JSON")->required();
  optimize->add_option("--model", opt_model, "model file (overrides the config)");
  optimize->add_option("--steps", steps, "PGD steps");
  optimize->add_option("--step-size", step_size, "PGD step size");
  optimize->add_option("--budget", budget, "BO queries per stripe count");
  optimize->add_option("--q-min", q_min, "smallest stripe count");
  optimize->add_option("--q-max", q_max, "largest stripe count");
  optimize->add_option("--seed", opt_seed, "optimiser seed");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run one drive-by scenario");
  std::string sim_config, sim_out, sim_frames, sim_mode, sim_model, sim_profile;
  simulate->add_option("--config", sim_config, "scenario JSON")->required();
  simulate->add_option("--out", sim_out, "per-frame CSV (overrides the config)");
  simulate->add_option("--frames-dir", sim_frames, "write every rendered crop as PPM");
  simulate->add_option("--mode", sim_mode, "random, primitive, gs1, gs2 or gs2-still");
  simulate->add_option("--model", sim_model, "model file (overrides the config)");
  simulate->add_option("--profile", sim_profile, "per-metre distance profile CSV");

  // compare
  auto* compare = app.add_subcommand("compare", "compare attack modes over seeded trials");
  std::string cmp_config, cmp_modes = "random,primitive,gs1,gs2,gs2-still", cmp_out, cmp_model;
  std::size_t trials = 10;
  compare->add_option("--config", cmp_config, "base scenario JSON")->required();
  compare->add_option("--modes", cmp_modes, "comma-separated modes");
  compare->add_option("--trials", trials, "trials per mode");
  compare->add_option("--out", cmp_out, "comparison CSV (stdout when omitted)");
  compare->add_option("--model", cmp_model, "model file (overrides the config)");

  // trace
  auto* trace = app.add_subcommand("trace", "synthesise a camera supply-current trace");
  sf::TraceParams tp;
  double trace_fps = 30.0;
  std::string trace_out;
  trace->add_option("--fps", trace_fps, "camera frame rate");
  trace->add_option("--duration", tp.duration, "seconds");
  trace->add_option("--sample-rate", tp.sample_rate, "Hz");
  trace->add_option("--noise", tp.noise_sd, "baseline noise sd");
  trace->add_option("--jitter-us", tp.spike_jitter_sd, "spike timing jitter sd, microseconds");
  trace->add_option("--lead-us", tp.spike_lead, "spike lead over the framing moment, microseconds");
  trace->add_option("--seed", tp.seed, "noise seed");
  trace->add_option("--out", trace_out, "trace file (.csv, otherwise f32 + .json sidecar)")->required();

  // sniff
  auto* sniff = app.add_subcommand("sniff", "estimate frame rate and framing moments from a trace");
  std::string sniff_in;
  double fps_hint = 0.0, threshold = 4.0;
  sniff->add_option("--in", sniff_in, "trace file (.csv or f32 with sidecar)")->required();
  sniff->add_option("--fps-hint", fps_hint, "expected frame rate; limits the spectral search");
  sniff->add_option("--threshold", threshold, "detection threshold in trace standard deviations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*render) {
      sf::RadiometricScene scene;
      if (!sign_name.empty()) {
        scene = sf::sign_scene(sf::parse_sign_class(sign_name), side, sf::SceneConfig{});
      } else if (!scene_path.empty()) {
        scene = load_scene(scene_path);
      } else {
        throw sf::ConfigError("render needs --scene or --sign");
      }
      sf::CameraConfig cam = sf::default_camera();
      sf::FlickerSignal signal = sf::FlickerSignal::constant(0.0, 1, cam.t_frame(), sf::Extension::periodic);
      if (!signal_path.empty()) signal = sf::load_signal(signal_path).f0;
      const sf::Image frame = scene.rows() == cam.n_lines && scene.cols() == cam.n_cols
                                  ? sf::render_frame(scene, cam, signal, phi)
                                  : sf::render_crop(scene, cam, signal, top_row, phi);
      sf::write_ppm(render_out, frame);
    } else if (*train) {
      sf::TrainParams params;
      params.epochs = epochs;
      const auto model = sf::train(sf::generate_dataset(sf::SignDatasetSpec{}), params, train_seed);
      model.save(model_out);
      std::printf("holdout accuracy %.4f, train accuracy %.4f\n", model.info().holdout_accuracy,
                  model.info().train_accuracy);
      if (!model.info().converged) throw sf::TrainingError("holdout accuracy below the 95% target");
    } else if (*optimize) {
      const auto cfg = sf::load_scenario(opt_config, false);
      const auto model = obtain_model(opt_model.empty() ? cfg.model_path.string() : opt_model, cfg.seed);
      const sf::CameraConfig cam = cfg.planning_camera();
      const double y_t = cfg.sign.y_sign - cfg.tracker.y_cam;
      const auto proj = sf::project_sign(cam, cfg.sign, {cfg.start_z, y_t, 0.0, 0.0});
      const auto n_sign0 = static_cast<std::size_t>(std::max(1L, sf::round_half_up(proj.n_sign)));
      auto scene = sf::sign_scene(cfg.ground_truth, n_sign0, cfg.scene);
      sf::AttackObjectiveSpec spec;
      if (opt_mode == "gs2") {
        std::optional<std::size_t> target = cfg.target;
        if (!opt_target.empty()) target = sf::parse_sign_class(opt_target);
        if (!target) throw sf::ConfigError("gs2 optimisation needs --target or sign.target");
        spec = sf::AttackObjectiveSpec::phase_synced(std::move(scene), cam, cfg.ground_truth, *target);
      } else {
        spec = sf::AttackObjectiveSpec::freq_calibrated(std::move(scene), cam, cfg.ground_truth);
      }
      sf::AttackSignal out;
      out.t_att0 = spec.t_att0;
      out.n_sign0 = n_sign0;
      out.metadata = {{"seed", opt_seed}, {"mode", opt_mode}, {"attack", opt_attack},
                      {"ground_truth", std::string(sf::sign_name(cfg.ground_truth))}};
      if (spec.target) out.metadata["target"] = std::string(sf::sign_name(*spec.target));
      double success = 0.0;
      if (opt_attack == "whitebox") {
        sf::PgdParams pp;
        pp.steps = steps;
        pp.step_size = step_size;
        const auto res = sf::optimize_pgd(spec, model, pp, opt_seed);
        out.f0 = res.signal;
        out.metadata["loss"] = res.loss;
        out.metadata["iterations"] = res.iterations;
        success = res.success_rate;
      } else {
        const auto res = sf::sweep_q(spec, model, q_min, q_max, budget, opt_seed);
        out.f0 = res.best.stripes.to_signal(spec);
        out.metadata["loss"] = res.best.loss;
        out.metadata["q"] = res.best.stripes.q;
        out.metadata["queries"] = res.best.queries;
        success = res.best.success_rate;
      }
      out.metadata["success_rate"] = success;
      sf::save_signal(opt_out, out);
      std::printf("loss %.6f, success over the offset grid %.3f\n", out.metadata["loss"].get<double>(), success);
    } else if (*simulate) {
      auto cfg = sf::load_scenario(sim_config);
      if (!sim_mode.empty()) cfg.mode = sf::parse_mode(sim_mode);
      if (!sim_out.empty()) cfg.csv_path = sim_out;
      if (!sim_frames.empty()) cfg.frames_dir = sim_frames;
      if (cfg.csv_path.empty()) throw sf::ConfigError("no output CSV (use --out or output.csv)");
      const auto model = obtain_model(sim_model.empty() ? cfg.model_path.string() : sim_model, cfg.seed);
      const auto run = sf::run_scenario(cfg, model);
      sf::write_run_csv(cfg.csv_path, run);
      if (!sim_profile.empty()) {
        std::ofstream os(sim_profile);
        if (!os) throw sf::ConfigError("cannot open " + sim_profile);
        sf::write_profile_csv(os, sf::distance_profile(run));
      }
      const auto p = sf::pmcr(run);
      std::printf("frames %zu, excluded %zu, MR %.4f, PMCR %.4f (%s), mean entropy %.4f bits\n", run.records.size(),
                  run.records.size() - run.evaluated(), sf::misclassification_rate(run), p.rate,
                  p.cls ? std::string(sf::sign_name(*p.cls)).c_str() : "none", sf::mean_entropy(run));
    } else if (*compare) {
      const auto cfg = sf::load_scenario(cmp_config);
      const auto modes = parse_modes(cmp_modes);
      const auto model = obtain_model(cmp_model.empty() ? cfg.model_path.string() : cmp_model, cfg.seed);
      const auto cmp = sf::compare_modes(cfg, modes, trials, model);
      if (cmp_out.empty()) {
        sf::write_comparison_csv(std::cout, cmp);
      } else {
        std::ofstream os(cmp_out);
        if (!os) throw sf::ConfigError("cannot open " + cmp_out);
        sf::write_comparison_csv(os, cmp);
      }
    } else if (*trace) {
      sf::CameraConfig cam = sf::default_camera();
      cam.frame_rate = trace_fps;
      tp.spike_jitter_sd *= 1e-6;
      tp.spike_lead *= 1e-6;
      const auto tr = sf::synthesize_trace(cam, tp);
      if (trace_out.size() > 4 && trace_out.substr(trace_out.size() - 4) == ".csv") {
        sf::write_trace_csv(trace_out, tr);
      } else {
        sf::write_trace_f32(trace_out, tr);
      }
    } else if (*sniff) {
      const auto tr = load_trace(sniff_in);
      const double fps = sf::estimate_frame_rate(tr, fps_hint > 0.0 ? std::optional<double>(fps_hint) : std::nullopt);
      sf::DetectorParams dp;
      dp.frame_rate = fps;
      dp.threshold_factor = threshold;
      const auto spikes = sf::detect_spikes(tr, dp);
      std::printf("frame rate %.4f Hz\nspikes %zu\n", fps, spikes.size());
      for (double t : spikes) std::printf("%.6f\n", t);
    }
  } catch (const sf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return 0;
}
