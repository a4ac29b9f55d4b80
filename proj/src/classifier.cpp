#include "stripeforge/classifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string_view>

#include "stripeforge/error.hpp"
#include "stripeforge/signs.hpp"

namespace stripeforge {

namespace {

Image box_blur(const Image& in, std::size_t radius) {
  if (radius == 0) return in;
  Image out(in.rows(), in.cols());
  const long rr = static_cast<long>(radius);
  const long rows = static_cast<long>(in.rows());
  const long cols = static_cast<long>(in.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      std::array<double, 3> acc{};
      double n = 0.0;
      for (long i = std::max(0L, r - rr); i <= std::min(rows - 1, r + rr); ++i) {
        for (long j = std::max(0L, c - rr); j <= std::min(cols - 1, c + rr); ++j) {
          for (std::size_t ch = 0; ch < 3; ++ch) acc[ch] += in.at(i, j, ch);
          n += 1.0;
        }
      }
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(r, c, ch) = acc[ch] / n;
    }
  }
  return out;
}

double activate(Activation a, double x) { return a == Activation::tanh ? std::tanh(x) : x; }

// Derivative expressed through the activation output y.
double activate_grad(Activation a, double y) { return a == Activation::tanh ? 1.0 - y * y : 1.0; }

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct Layout {
  std::size_t w1, b1, w2, b2;
  explicit Layout(const Architecture& a)
      : w1(0), b1(a.hidden * a.inputs()), w2(b1 + a.hidden), b2(w2 + a.classes * a.hidden) {}
};

// Forward pass over double parameters; used by training and by the model.
template <typename T>
void forward_pass(const Architecture& arch, std::span<const T> p, std::span<const double> x,
                  std::vector<double>& hidden, std::vector<double>& logits) {
  const Layout at(arch);
  const std::size_t n_in = arch.inputs();
  hidden.assign(arch.hidden, 0.0);
  for (std::size_t h = 0; h < arch.hidden; ++h) {
    const T* w = p.data() + at.w1 + h * n_in;
    double acc = static_cast<double>(p[at.b1 + h]);
    for (std::size_t i = 0; i < n_in; ++i) acc += static_cast<double>(w[i]) * (x[i] - 0.5);
    hidden[h] = activate(arch.activation, acc);
  }
  logits.assign(arch.classes, 0.0);
  for (std::size_t k = 0; k < arch.classes; ++k) {
    const T* w = p.data() + at.w2 + k * arch.hidden;
    double acc = static_cast<double>(p[at.b2 + k]);
    for (std::size_t h = 0; h < arch.hidden; ++h) acc += static_cast<double>(w[h]) * hidden[h];
    logits[k] = acc;
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                       static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char*>(b.data()), 4);
  if (!is) throw ConfigError("truncated model file");
  return b[0] | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) | (std::uint32_t{b[3]} << 24);
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float f = 0.0f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

Dataset generate_dataset(const SignDatasetSpec& spec) {
  if (spec.n_classes < 2 || spec.n_classes > kSignClassCount) {
    throw ConfigError("dataset needs between 2 and 8 classes");
  }
  if (spec.image_rows == 0 || spec.image_cols == 0) throw ConfigError("image size must be positive");
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  Dataset ds;
  ds.n_classes = spec.n_classes;
  ds.images.reserve(spec.n_classes * spec.samples_per_class);
  for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
    for (std::size_t cls = 0; cls < spec.n_classes; ++cls) {
      SignPose pose{uniform(spec.scale_min, spec.scale_max), uniform(-spec.offset_jitter, spec.offset_jitter),
                    uniform(-spec.offset_jitter, spec.offset_jitter)};
      const std::array<double, 3> background{uniform(0.2, 0.5), uniform(0.25, 0.55), uniform(0.2, 0.5)};
      const std::size_t side = std::max(spec.image_rows, spec.image_cols);
      Image tex = render_sign_texture(cls, side, pose, background, 2);
      if (tex.rows() != spec.image_rows || tex.cols() != spec.image_cols) {
        tex = resize_area(tex, spec.image_rows, spec.image_cols);
      }
      const double brightness = uniform(spec.brightness_min, spec.brightness_max);
      std::array<double, 3> gain{};
      for (auto& g : gain) g = brightness * uniform(1.0 - spec.channel_gain_jitter, 1.0 + spec.channel_gain_jitter);
      const auto radius = std::uniform_int_distribution<std::size_t>(0, spec.blur_radius_max)(rng);
      Image img = box_blur(tex, radius);
      for (std::size_t r = 0; r < img.rows(); ++r) {
        for (std::size_t c = 0; c < img.cols(); ++c) {
          for (std::size_t ch = 0; ch < 3; ++ch) {
            img.at(r, c, ch) = img.at(r, c, ch) * gain[ch] + spec.noise_sd * noise(rng);
          }
        }
      }
      img.clamp_unit();
      ds.images.push_back(std::move(img));
      ds.labels.push_back(cls);
    }
  }
  return ds;
}

SurrogateModel::SurrogateModel(Architecture arch, std::vector<float> params, TrainingInfo info)
    : arch_(arch), params_(std::move(params)), info_(info) {
  if (arch_.classes < 2 || arch_.hidden == 0 || arch_.inputs() == 0) {
    throw ConfigError("invalid model architecture");
  }
  if (params_.size() != arch_.parameter_count()) throw ConfigError("parameter count does not match architecture");
}

SurrogateModel SurrogateModel::random(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> p(arch.parameter_count(), 0.0f);
  const Layout at(arch);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(arch.inputs() + arch.hidden));
  const double lim2 = std::sqrt(6.0 / static_cast<double>(arch.hidden + arch.classes));
  std::uniform_real_distribution<double> u1(-lim1, lim1);
  std::uniform_real_distribution<double> u2(-lim2, lim2);
  for (std::size_t i = at.w1; i < at.b1; ++i) p[i] = static_cast<float>(u1(rng));
  for (std::size_t i = at.w2; i < at.b2; ++i) p[i] = static_cast<float>(u2(rng));
  return SurrogateModel(arch, std::move(p));
}

void SurrogateModel::check_input(const Image& image) const {
  if (image.rows() != arch_.rows || image.cols() != arch_.cols) {
    throw ConfigError("image does not match the model input size");
  }
}

void SurrogateModel::forward(const Image& image, std::vector<double>& hidden,
                             std::vector<double>& logits) const {
  check_input(image);
  forward_pass<float>(arch_, params_, image.data(), hidden, logits);
}

std::vector<double> SurrogateModel::logits(const Image& image) const {
  std::vector<double> hidden, z;
  forward(image, hidden, z);
  return z;
}

std::vector<double> SurrogateModel::probabilities(const Image& image) const {
  auto z = logits(image);
  softmax_inplace(z);
  return z;
}

Prediction SurrogateModel::predict(const Image& image) const {
  Prediction p;
  p.probabilities = probabilities(image);
  p.cls = argmax(p.probabilities);
  return p;
}

double SurrogateModel::loss(const Image& image, std::size_t k) const {
  auto z = logits(image);
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return std::log(sum) + m - z.at(k);
}

std::pair<double, Image> SurrogateModel::loss_and_gradient(const Image& image, std::size_t k) const {
  if (k >= arch_.classes) throw DomainError("target class out of range");
  std::vector<double> hidden, z;
  forward(image, hidden, z);
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  const double loss = std::log(sum) + m - z[k];

  softmax_inplace(z);
  z[k] -= 1.0;  // dL/dlogits
  const Layout at(arch_);
  std::vector<double> d_pre(arch_.hidden, 0.0);
  for (std::size_t cls = 0; cls < arch_.classes; ++cls) {
    const float* w = params_.data() + at.w2 + cls * arch_.hidden;
    for (std::size_t h = 0; h < arch_.hidden; ++h) d_pre[h] += static_cast<double>(w[h]) * z[cls];
  }
  for (std::size_t h = 0; h < arch_.hidden; ++h) d_pre[h] *= activate_grad(arch_.activation, hidden[h]);

  Image grad(arch_.rows, arch_.cols);
  auto g = grad.data();
  const std::size_t n_in = arch_.inputs();
  for (std::size_t h = 0; h < arch_.hidden; ++h) {
    const float* w = params_.data() + at.w1 + h * n_in;
    const double d = d_pre[h];
    for (std::size_t i = 0; i < n_in; ++i) g[i] += static_cast<double>(w[i]) * d;
  }
  return {loss, std::move(grad)};
}

Image SurrogateModel::input_gradient(const Image& image, std::size_t k) const {
  return loss_and_gradient(image, k).second;
}

void SurrogateModel::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os.write("SGM1", 4);
  put_u32(os, static_cast<std::uint32_t>(arch_.rows));
  put_u32(os, static_cast<std::uint32_t>(arch_.cols));
  put_u32(os, static_cast<std::uint32_t>(arch_.hidden));
  put_u32(os, static_cast<std::uint32_t>(arch_.classes));
  put_u32(os, static_cast<std::uint32_t>(arch_.activation));
  put_u32(os, info_.epochs);
  put_f32(os, static_cast<float>(info_.holdout_accuracy));
  for (float p : params_) put_f32(os, p);
  if (!os) throw ConfigError("failed writing " + path.string());
}

SurrogateModel SurrogateModel::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || std::string_view(magic.data(), 4) != "SGM1") throw ConfigError(path.string() + ": bad SGM1 magic");
  Architecture arch;
  arch.rows = get_u32(is);
  arch.cols = get_u32(is);
  arch.hidden = get_u32(is);
  arch.classes = get_u32(is);
  const std::uint32_t act = get_u32(is);
  if (act > 1) throw ConfigError(path.string() + ": unknown activation");
  arch.activation = static_cast<Activation>(act);
  TrainingInfo info;
  info.epochs = get_u32(is);
  info.holdout_accuracy = get_f32(is);
  std::vector<float> params(arch.parameter_count());
  for (auto& p : params) p = get_f32(is);
  return SurrogateModel(arch, std::move(params), info);
}

double accuracy(const SurrogateModel& model, std::span<const Image> images,
                std::span<const std::size_t> labels) {
  if (images.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < images.size(); ++i) hits += model.predict(images[i]).cls == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(images.size());
}

SurrogateModel train(const Dataset& dataset, const TrainParams& params, std::uint64_t seed) {
  if (dataset.size() == 0) throw ConfigError("empty dataset");
  Architecture arch;
  arch.rows = dataset.images.front().rows();
  arch.cols = dataset.images.front().cols();
  arch.hidden = params.hidden;
  arch.classes = dataset.n_classes;
  arch.activation = params.activation;

  std::vector<std::size_t> train_idx, hold_idx;
  const std::size_t stride =
      params.holdout_fraction > 0.0 ? static_cast<std::size_t>(std::llround(1.0 / params.holdout_fraction)) : 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (stride > 0 && i % stride == stride - 1) {
      hold_idx.push_back(i);
    } else {
      train_idx.push_back(i);
    }
  }

  const SurrogateModel init = SurrogateModel::random(arch, seed);
  std::vector<double> w(init.parameters().begin(), init.parameters().end());
  std::vector<double> grad(w.size());
  const Layout at(arch);
  const std::size_t n_in = arch.inputs();
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::vector<double> hidden, z, d_pre(arch.hidden);

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    for (std::size_t start = 0; start < train_idx.size(); start += params.batch_size) {
      const std::size_t end = std::min(train_idx.size(), start + params.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const Image& img = dataset.images[train_idx[b]];
        const std::size_t label = dataset.labels[train_idx[b]];
        const auto x = img.data();
        forward_pass<double>(arch, w, x, hidden, z);
        softmax_inplace(z);
        z[label] -= 1.0;
        std::fill(d_pre.begin(), d_pre.end(), 0.0);
        for (std::size_t k = 0; k < arch.classes; ++k) {
          grad[at.b2 + k] += z[k];
          double* gw = grad.data() + at.w2 + k * arch.hidden;
          const double* ww = w.data() + at.w2 + k * arch.hidden;
          for (std::size_t h = 0; h < arch.hidden; ++h) {
            gw[h] += z[k] * hidden[h];
            d_pre[h] += ww[h] * z[k];
          }
        }
        for (std::size_t h = 0; h < arch.hidden; ++h) {
          const double d = d_pre[h] * activate_grad(arch.activation, hidden[h]);
          grad[at.b1 + h] += d;
          double* gw = grad.data() + at.w1 + h * n_in;
          for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * (x[i] - 0.5);
        }
      }
      const double step = params.learning_rate / static_cast<double>(end - start);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * grad[i];
    }
  }

  std::vector<float> final_params(w.begin(), w.end());
  SurrogateModel model(arch, std::move(final_params));
  std::vector<Image> train_images, hold_images;
  std::vector<std::size_t> train_labels, hold_labels;
  for (auto i : train_idx) {
    train_images.push_back(dataset.images[i]);
    train_labels.push_back(dataset.labels[i]);
  }
  for (auto i : hold_idx) {
    hold_images.push_back(dataset.images[i]);
    hold_labels.push_back(dataset.labels[i]);
  }
  TrainingInfo info;
  info.epochs = static_cast<std::uint32_t>(params.epochs);
  info.train_accuracy = accuracy(model, train_images, train_labels);
  info.holdout_accuracy = hold_images.empty() ? info.train_accuracy : accuracy(model, hold_images, hold_labels);
  info.converged = info.holdout_accuracy >= params.target_accuracy;
  return SurrogateModel(arch, std::vector<float>(model.parameters().begin(), model.parameters().end()), info);
}

Prediction classify_crop(const SurrogateModel& model, const Image& crop) {
  if (crop.empty()) throw DomainError("empty crop");
  const auto& arch = model.architecture();
  return model.predict(resize_bilinear(crop, arch.rows, arch.cols));
}

}  // namespace stripeforge
