#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "stripeforge/image.hpp"

namespace stripeforge {

struct SignDatasetSpec {
  std::size_t n_classes = 8;
  std::size_t image_rows = 32;
  std::size_t image_cols = 32;
  std::size_t samples_per_class = 300;
  double brightness_min = 0.15;
  double brightness_max = 1.0;
  double channel_gain_jitter = 0.05;  ///< per-channel gain in [1-j, 1+j]
  double offset_jitter = 0.08;       ///< sign shift, fraction of half-width
  double scale_min = 0.9;
  double scale_max = 1.05;
  std::size_t blur_radius_max = 1;   ///< box blur radius drawn from [0, max]
  double noise_sd = 0.02;
  std::uint64_t seed = 1;
};

struct Dataset {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;

  std::size_t size() const { return images.size(); }
};

/// Deterministic, class-balanced synthetic sign images in [0, 1].
Dataset generate_dataset(const SignDatasetSpec& spec);

enum class Activation : std::uint32_t { tanh = 0, identity = 1 };

struct Architecture {
  std::size_t rows = 32;
  std::size_t cols = 32;
  std::size_t hidden = 64;
  std::size_t classes = 8;
  Activation activation = Activation::tanh;

  std::size_t inputs() const { return rows * cols * Image::kChannels; }
  std::size_t parameter_count() const { return hidden * inputs() + hidden + classes * hidden + classes; }
};

struct TrainingInfo {
  std::uint32_t epochs = 0;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
  bool converged = false;
};

struct Prediction {
  std::size_t cls = 0;
  std::vector<double> probabilities;
  double confidence() const { return probabilities[cls]; }
};

/// Two fully-connected layers with an elementwise nonlinearity and softmax:
/// p = softmax(W2 act(W1 (x - 0.5) + b1) + b2). Immutable once built.
class SurrogateModel {
 public:
  SurrogateModel(Architecture arch, std::vector<float> params, TrainingInfo info = {});

  /// Xavier-uniform initialisation.
  static SurrogateModel random(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  const TrainingInfo& info() const { return info_; }
  std::span<const float> parameters() const { return params_; }

  std::vector<double> logits(const Image& image) const;
  std::vector<double> probabilities(const Image& image) const;
  Prediction predict(const Image& image) const;

  /// Cross-entropy -log p_k.
  double loss(const Image& image, std::size_t k) const;
  /// Gradient of loss(image, k) with respect to the input pixels.
  Image input_gradient(const Image& image, std::size_t k) const;
  std::pair<double, Image> loss_and_gradient(const Image& image, std::size_t k) const;

  /// "SGM1", u32 rows, cols, hidden, classes, activation, epochs, then
  /// f32 holdout accuracy and the parameters, all little-endian.
  void save(const std::filesystem::path& path) const;
  static SurrogateModel load(const std::filesystem::path& path);

  friend bool operator==(const SurrogateModel& a, const SurrogateModel& b) {
    return a.params_ == b.params_ && a.arch_.rows == b.arch_.rows && a.arch_.cols == b.arch_.cols &&
           a.arch_.hidden == b.arch_.hidden && a.arch_.classes == b.arch_.classes &&
           a.arch_.activation == b.arch_.activation;
  }

 private:
  void check_input(const Image& image) const;
  void forward(const Image& image, std::vector<double>& hidden, std::vector<double>& logits) const;

  Architecture arch_;
  std::vector<float> params_;
  TrainingInfo info_;
};

struct TrainParams {
  std::size_t hidden = 64;
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double holdout_fraction = 0.2;
  double target_accuracy = 0.95;
  Activation activation = Activation::tanh;
};

/// Mini-batch SGD with a fixed step and seeded shuffling. Every
/// round(1/holdout_fraction)-th sample is held out. The returned model's
/// info() reports accuracies and whether target_accuracy was reached.
SurrogateModel train(const Dataset& dataset, const TrainParams& params, std::uint64_t seed);

double accuracy(const SurrogateModel& model, std::span<const Image> images,
                std::span<const std::size_t> labels);

/// Bilinear resize (half-pixel centres) to the model input, then predict.
Prediction classify_crop(const SurrogateModel& model, const Image& crop);

}  // namespace stripeforge
