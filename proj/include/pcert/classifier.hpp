#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcert/image.hpp"

namespace pcert {

/// Per-class probabilities; non-negative and summing to one.
using ProbabilityVector = std::vector<double>;

/// Pure prediction function. Implementations must be deterministic and safe to
/// call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t class_count() const = 0;
  virtual ProbabilityVector predict(const ImageTensor& image) const = 0;
};

/// Index of the largest probability; ties go to the smallest class id.
std::size_t predicted_label(std::span<const double> probs);

/// Lower clamp applied to the true-class probability before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// -ln(max(probs[label], 1e-12)).
double cross_entropy(std::span<const double> probs, std::size_t label);

/// Softmax with max-subtraction.
ProbabilityVector softmax(std::span<const double> logits);

struct InputShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  std::size_t flat_size() const noexcept { return height * width * channels; }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

/// Exact gradients of cross_entropy(mlp_forward(image), label).
struct MlpGradients {
  std::vector<double> w1;  // hidden x inputs, row-major
  std::vector<double> b1;
  std::vector<double> w2;  // classes x hidden, row-major
  std::vector<double> b2;
  std::vector<double> input;
  double loss = 0.0;
};

/// Non-negative H x W map; larger means more relevant to the prediction.
struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

/// One hidden ReLU layer followed by a softmax output layer. Parameters are
/// stored as float32 (the checkpoint precision); arithmetic runs in double.
class MlpModel final : public Classifier {
 public:
  MlpModel(InputShape shape, std::size_t hidden, std::size_t classes);

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel initialized(InputShape shape, std::size_t hidden, std::size_t classes,
                              std::uint64_t seed);

  std::size_t class_count() const override { return classes_; }
  ProbabilityVector predict(const ImageTensor& image) const override;

  MlpGradients backward(const ImageTensor& image, std::size_t label) const;

  const InputShape& shape() const noexcept { return shape_; }
  std::size_t hidden() const noexcept { return hidden_; }

  std::span<float> w1() noexcept { return w1_; }
  std::span<float> b1() noexcept { return b1_; }
  std::span<float> w2() noexcept { return w2_; }
  std::span<float> b2() noexcept { return b2_; }
  std::span<const float> w1() const noexcept { return w1_; }
  std::span<const float> b1() const noexcept { return b1_; }
  std::span<const float> w2() const noexcept { return w2_; }
  std::span<const float> b2() const noexcept { return b2_; }

  void save(const std::filesystem::path& path) const;
  static MlpModel load(const std::filesystem::path& path);
  std::vector<std::uint8_t> serialize() const;
  static MlpModel deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const MlpModel& a, const MlpModel& b) {
    return a.shape_ == b.shape_ && a.hidden_ == b.hidden_ && a.classes_ == b.classes_ &&
           a.w1_ == b.w1_ && a.b1_ == b.b1_ && a.w2_ == b.w2_ && a.b2_ == b.b2_;
  }

 private:
  void check_input(const ImageTensor& image) const;
  void hidden_preactivation(const ImageTensor& image, std::vector<double>& out) const;

  InputShape shape_;
  std::size_t hidden_ = 0;
  std::size_t classes_ = 0;
  std::vector<float> w1_;
  std::vector<float> b1_;
  std::vector<float> w2_;
  std::vector<float> b2_;
};

/// Free-function forms of the model operations.
inline ProbabilityVector mlp_forward(const MlpModel& model, const ImageTensor& image) {
  return model.predict(image);
}
inline MlpGradients mlp_backward(const MlpModel& model, const ImageTensor& image,
                                 std::size_t label) {
  return model.backward(image, label);
}

/// Per-pixel absolute input gradient, summed over channels.
SaliencyMap gradient_saliency(const MlpModel& model, const ImageTensor& image, std::size_t label);

}  // namespace pcert
