#include "stripeforge/sniffer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include "json.hpp"
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "stripeforge/error.hpp"
#include "stripeforge/render.hpp"

namespace stripeforge {

namespace {

std::vector<double> matched_filter(std::span<const double> x, double half_width_samples) {
  const auto k = static_cast<long>(std::ceil(half_width_samples));
  std::vector<double> tpl;
  for (long i = -k; i <= k; ++i) {
    tpl.push_back(std::max(0.0, 1.0 - std::abs(static_cast<double>(i)) / half_width_samples));
  }
  const double sum = std::accumulate(tpl.begin(), tpl.end(), 0.0);
  for (auto& v : tpl) v /= sum;
  const auto n = static_cast<long>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long j = -k; j <= k; ++j) {
      const long s = i + j;
      if (s >= 0 && s < n) acc += tpl[static_cast<std::size_t>(j + k)] * x[static_cast<std::size_t>(s)];
    }
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<long>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

std::size_t floor_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

}  // namespace

CurrentTrace synthesize_trace(const CameraConfig& cam, const TraceParams& p) {
  cam.validate();
  const double t_frame = cam.t_frame();
  if (p.duration < 3.0 * t_frame) throw ConfigError("trace must span at least three frame periods");
  if (!(p.sample_rate > 20.0 * cam.frame_rate)) throw ConfigError("sample rate too low to resolve spikes");
  if (p.noise_sd < 0.0 || p.spike_jitter_sd < 0.0) throw ConfigError("noise parameters must be non-negative");

  CurrentTrace tr;
  tr.sample_rate = p.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(p.duration * p.sample_rate));
  tr.samples.assign(n, 0.0);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double t0 = p.first_moment * t_frame;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = tr.time(i);
    tr.samples[i] = p.noise_sd * gauss(rng) + p.ripple * p.spike_amp * std::sin(2.0 * M_PI * (t - t0) / t_frame);
  }
  const double half = 0.5 * p.spike_width;
  for (double m = t0; m < p.duration; m += t_frame) {
    tr.moments.push_back(m);
    const double c = m - p.spike_lead + p.spike_jitter_sd * gauss(rng);
    const auto lo = static_cast<long>(std::ceil((c - half) * p.sample_rate));
    const auto hi = static_cast<long>(std::floor((c + half) * p.sample_rate));
    for (long i = std::max(0L, lo); i <= hi && i < static_cast<long>(n); ++i) {
      const double t = tr.time(static_cast<std::size_t>(i));
      tr.samples[static_cast<std::size_t>(i)] += p.spike_amp * std::max(0.0, 1.0 - std::abs(t - c) / half);
    }
  }
  return tr;
}

std::vector<double> detect_spikes(const CurrentTrace& trace, const DetectorParams& p) {
  if (!(p.threshold_factor > 1.0)) throw ConfigError("threshold factor must exceed 1");
  if (!(p.frame_rate > 0.0)) throw ConfigError("frame rate must be positive");
  if (trace.samples.empty() || !(trace.sample_rate > 0.0)) throw NoSignalError("empty trace");
  const double t_frame = 1.0 / p.frame_rate;
  const double half = std::max(1.0, 0.5 * p.spike_width * trace.sample_rate);
  const auto y = matched_filter(trace.samples, half);

  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double threshold = mean + p.threshold_factor * std::sqrt(var / n);

  const double refractory = p.refractory * t_frame * trace.sample_rate;
  std::vector<std::size_t> peaks;
  std::size_t i = 0;
  while (i < y.size()) {
    if (y[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t best = i;
    while (i < y.size() && y[i] > threshold) {
      if (y[i] > y[best]) best = i;
      ++i;
    }
    if (!peaks.empty() && static_cast<double>(best - peaks.back()) < refractory) {
      if (y[best] > y[peaks.back()]) peaks.back() = best;
    } else {
      peaks.push_back(best);
    }
  }
  if (peaks.empty()) throw NoSignalError("no spike crossed the detection threshold");
  std::vector<double> times;
  times.reserve(peaks.size());
  for (auto pk : peaks) {
    // Parabolic refinement of the filtered peak.
    double offset = 0.0;
    if (pk > 0 && pk + 1 < y.size()) {
      const double den = y[pk - 1] - 2.0 * y[pk] + y[pk + 1];
      if (den < 0.0) offset = std::clamp(0.5 * (y[pk - 1] - y[pk + 1]) / den, -0.5, 0.5);
    }
    times.push_back((static_cast<double>(pk) + offset) / trace.sample_rate);
  }
  return times;
}

Spectrum welch_psd(std::span<const double> x, double sample_rate, std::size_t segment, std::size_t pad) {
  if (segment < 8 || segment > x.size()) throw DomainError("invalid Welch segment length");
  if (pad == 0) throw DomainError("padding factor must be positive");
  const std::size_t nfft = segment * pad;
  std::vector<double> window(segment);
  double wss = 0.0;
  for (std::size_t i = 0; i < segment; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(segment));
    wss += window[i] * window[i];
  }
  double* in = fftw_alloc_real(nfft);
  fftw_complex* out = fftw_alloc_complex(nfft / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, out, FFTW_ESTIMATE);

  Spectrum s;
  const std::size_t bins = nfft / 2 + 1;
  s.power.assign(bins, 0.0);
  s.freq.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) s.freq[k] = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
  const std::size_t step = segment / 2;
  std::size_t count = 0;
  for (std::size_t start = 0; start + segment <= x.size(); start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < segment; ++i) mean += x[start + i];
    mean /= static_cast<double>(segment);
    for (std::size_t i = 0; i < segment; ++i) in[i] = (x[start + i] - mean) * window[i];
    std::fill(in + segment, in + nfft, 0.0);
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) s.power[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    ++count;
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  const double scale = 1.0 / (sample_rate * wss * static_cast<double>(count));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (nfft % 2 == 0 && k == bins - 1);
    s.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return s;
}

double estimate_frame_rate(const CurrentTrace& trace, std::optional<double> fps_hint) {
  if (trace.samples.size() < 64) throw EstimationError("trace too short for a spectral estimate");
  const std::size_t segment = std::max<std::size_t>(8, floor_pow2(trace.samples.size() / 2));
  const Spectrum s = welch_psd(trace.samples, trace.sample_rate, segment, 4);
  const double bin = s.freq[1];
  double f_lo = std::max(1.0, 4.0 * bin);
  double f_hi = std::min(500.0, 0.5 * trace.sample_rate);
  if (fps_hint) {
    if (!(*fps_hint > 0.0)) throw ConfigError("fps hint must be positive");
    f_lo = std::max(f_lo, 0.5 * *fps_hint);
    f_hi = std::min(f_hi, 1.5 * *fps_hint);
  }
  std::vector<std::size_t> band;
  for (std::size_t k = 1; k + 1 < s.freq.size(); ++k) {
    if (s.freq[k] >= f_lo && s.freq[k] <= f_hi) band.push_back(k);
  }
  if (band.size() < 3) throw EstimationError("search band holds too few spectral bins");
  std::vector<double> band_power;
  for (auto k : band) band_power.push_back(s.power[k]);
  const double floor_level = median(band_power);

  auto is_peak = [&](std::size_t k) { return s.power[k] >= s.power[k - 1] && s.power[k] >= s.power[k + 1]; };
  std::size_t best = band.front();
  for (auto k : band) {
    if (s.power[k] > s.power[best]) best = k;
  }
  if (!(s.power[best] > 100.0 * floor_level)) throw EstimationError("no spectral line stands out of the floor");

  for (int d = 8; d >= 2; --d) {
    const double f = s.freq[best] / d;
    if (f < f_lo) continue;
    const auto centre = static_cast<std::size_t>(std::llround(f / bin));
    std::size_t cand = centre;
    for (std::size_t k = centre > 3 ? centre - 3 : 1; k <= centre + 3 && k + 1 < s.freq.size(); ++k) {
      if (s.power[k] > s.power[cand]) cand = k;
    }
    if (cand >= 1 && is_peak(cand) && s.power[cand] >= 0.25 * s.power[best]) {
      best = cand;
      break;
    }
  }
  const double l0 = std::log(s.power[best - 1]);
  const double l1 = std::log(s.power[best]);
  const double l2 = std::log(s.power[best + 1]);
  const double denom = l0 - 2.0 * l1 + l2;
  const double shift = denom < 0.0 ? std::clamp(0.5 * (l0 - l2) / denom, -0.5, 0.5) : 0.0;
  return (static_cast<double>(best) + shift) * bin;
}

double DelayMapping::predict_n_up(double t_set) const { return a * (t_set / t_ro + 1.0) + b; }

double DelayMapping::t_set_for(double n_up) const { return ((n_up - b) / a - 1.0) * t_ro; }

std::vector<long> observe_top_rows(const SimulatedCamera& camera, double t_set, std::size_t frames) {
  const CameraConfig& cam = camera.cam;
  const double t_frame = cam.t_frame();
  TraceParams tp;
  tp.duration = (static_cast<double>(frames) + 1.0) * t_frame;
  tp.sample_rate = camera.sample_rate;
  tp.noise_sd = camera.noise_sd;
  tp.spike_jitter_sd = camera.spike_jitter_sd;
  tp.spike_lead = camera.spike_lead;
  tp.seed = camera.seed;
  const CurrentTrace trace = synthesize_trace(cam, tp);
  DetectorParams dp;
  dp.frame_rate = cam.frame_rate;
  const auto spikes = detect_spikes(trace, dp);

  // One pulse of four exposures; the first row exposed entirely inside it
  // is the top lit row.
  const double pulse = 4.0 * cam.t_exp;
  const FlickerSignal light = FlickerSignal::constant(1.0, 1, pulse, Extension::zero);
  std::vector<long> rows;
  for (std::size_t j = 0; j < frames && j < trace.moments.size(); ++j) {
    const double m = trace.moments[j];
    const auto it = std::min_element(spikes.begin(), spikes.end(), [m](double x, double y) {
      return std::abs(x - m) < std::abs(y - m);
    });
    if (std::abs(*it - m) > 0.5 * t_frame) throw CalibrationError("framing moment without a detected spike");
    const double start = *it + t_set - m;
    const auto gains = row_gains(light, cam, -start / cam.t_ro, cam.n_lines);
    double peak = 0.0;
    for (const auto& g : gains) peak = std::max(peak, g[0]);
    if (peak <= 0.0) throw CalibrationError("calibration pulse fell outside the frame");
    const double threshold = peak - 0.5 * (cam.t_ro / cam.t_exp) * peak;
    long top = 0;
    while (gains[static_cast<std::size_t>(top)][0] < threshold) ++top;
    rows.push_back(top + 1);
  }
  return rows;
}

DelayMapping calibrate_delay_mapping(const SimulatedCamera& camera, std::span<const long> n_set_grid,
                                     std::size_t frames) {
  if (n_set_grid.size() < 2) throw CalibrationError("calibration needs at least two delay settings");
  DelayMapping map;
  map.t_ro = camera.cam.t_ro;
  for (long n_set : n_set_grid) {
    if (n_set < 1) throw CalibrationError("n_set must be at least 1");
    const auto rows = observe_top_rows(camera, static_cast<double>(n_set - 1) * camera.cam.t_ro, frames);
    std::vector<double> obs(rows.begin(), rows.end());
    map.table.push_back({n_set, median(obs)});
  }
  for (std::size_t i = 1; i < map.table.size(); ++i) {
    if (map.table[i].n_set > map.table[i - 1].n_set && map.table[i].n_up <= map.table[i - 1].n_up) {
      throw CalibrationError("observed top rows are not increasing with the delay");
    }
  }
  const double n = static_cast<double>(map.table.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& o : map.table) {
    const auto x = static_cast<double>(o.n_set);
    sx += x;
    sy += o.n_up;
    sxx += x * x;
    sxy += x * o.n_up;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) throw CalibrationError("delay grid must hold distinct settings");
  map.a = (n * sxy - sx * sy) / den;
  map.b = (sy - map.a * sx) / n;
  if (!(map.a > 0.0)) throw CalibrationError("fitted mapping is not increasing");
  for (const auto& o : map.table) {
    map.residual = std::max(map.residual, std::abs(o.n_up - (map.a * static_cast<double>(o.n_set) + map.b)));
  }
  if (map.residual > 2.0) throw CalibrationError("delay mapping fit residual exceeds 2 rows");
  return map;
}

void write_trace_csv(const std::filesystem::path& path, const CurrentTrace& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << "t_s,amps\n";
  std::array<char, 64> buf{};
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    std::snprintf(buf.data(), buf.size(), "%.9g,%.9g\n", trace.time(i), trace.samples[i]);
    os << buf.data();
  }
}

CurrentTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("t_s,amps", 0) != 0) {
    throw ConfigError(path.string() + ": expected header t_s,amps");
  }
  std::vector<double> t;
  CurrentTrace tr;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    try {
      t.push_back(std::stod(line.substr(0, comma)));
      tr.samples.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": malformed row '" + line + "'");
    }
  }
  if (t.size() < 2 || !(t.back() > t.front())) throw ConfigError(path.string() + ": need increasing timestamps");
  tr.sample_rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
  return tr;
}

void write_trace_f32(const std::filesystem::path& path, const CurrentTrace& trace) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  for (double v : trace.samples) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, 4);
    const std::array<char, 4> b{static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                                static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    os.write(b.data(), 4);
  }
  std::ofstream side(path.string() + ".json");
  side << nlohmann::json{{"sample_rate_hz", trace.sample_rate}}.dump(2) << "\n";
}

CurrentTrace read_trace_f32(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw ConfigError("missing sidecar " + path.string() + ".json");
  CurrentTrace tr;
  try {
    tr.sample_rate = nlohmann::json::parse(side).at("sample_rate_hz").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ".json: " + e.what());
  }
  if (!(tr.sample_rate > 0.0)) throw ConfigError("sample_rate_hz must be positive");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::array<unsigned char, 4> b{};
  while (is.read(reinterpret_cast<char*>(b.data()), 4)) {
    const std::uint32_t bits = b[0] | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                               (std::uint32_t{b[3]} << 24);
    float f = 0.0f;
    std::memcpy(&f, &bits, 4);
    tr.samples.push_back(f);
  }
  return tr;
}

}  // namespace stripeforge
