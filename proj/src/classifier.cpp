#include "pcert/classifier.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include <fmt/format.h>

namespace pcert {

std::size_t predicted_label(std::span<const double> probs) {
  if (probs.empty()) throw InvalidArgument("empty probability vector");
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw InvalidArgument(fmt::format("label {} out of range for {} classes", label, probs.size()));
  }
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

ProbabilityVector softmax(std::span<const double> logits) {
  ProbabilityVector out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

namespace {

// Eight independent partial sums; fixed combination order keeps results bit-stable.
double dot(const float* w, const float* x, std::size_t n) {
  std::array<double, 8> acc{};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    for (std::size_t u = 0; u < 8; ++u) {
      acc[u] += static_cast<double>(w[j + u]) * static_cast<double>(x[j + u]);
    }
  }
  for (; j < n; ++j) acc[0] += static_cast<double>(w[j]) * static_cast<double>(x[j]);
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace

MlpModel::MlpModel(InputShape shape, std::size_t hidden, std::size_t classes)
    : shape_(shape),
      hidden_(hidden),
      classes_(classes),
      w1_(hidden * shape.flat_size(), 0.0f),
      b1_(hidden, 0.0f),
      w2_(classes * hidden, 0.0f),
      b2_(classes, 0.0f) {
  if (shape.flat_size() == 0) throw InvalidArgument("model input must be non-empty");
  if (hidden == 0) throw InvalidArgument("hidden width must be positive");
  if (classes < 2) throw InvalidArgument("model needs at least two classes");
}

MlpModel MlpModel::initialized(InputShape shape, std::size_t hidden, std::size_t classes,
                               std::uint64_t seed) {
  MlpModel model(shape, hidden, classes);
  std::mt19937_64 rng(seed);
  const double fan_in = static_cast<double>(shape.flat_size());
  const double limit1 = std::sqrt(6.0 / (fan_in + static_cast<double>(hidden)));
  const double limit2 = std::sqrt(6.0 / (static_cast<double>(hidden) + static_cast<double>(classes)));
  std::uniform_real_distribution<double> d1(-limit1, limit1);
  std::uniform_real_distribution<double> d2(-limit2, limit2);
  for (float& w : model.w1_) w = static_cast<float>(d1(rng));
  for (float& w : model.w2_) w = static_cast<float>(d2(rng));
  return model;
}

void MlpModel::check_input(const ImageTensor& image) const {
  const InputShape got{image.height(), image.width(), image.channels()};
  if (!(got == shape_)) {
    throw DimensionMismatch(fmt::format("model expects {}x{}x{} input, got {}x{}x{}",
                                        shape_.height, shape_.width, shape_.channels, got.height,
                                        got.width, got.channels));
  }
}

void MlpModel::hidden_preactivation(const ImageTensor& image, std::vector<double>& out) const {
  const std::size_t d = shape_.flat_size();
  const float* x = image.data().data();
  out.resize(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) {
    out[h] = dot(w1_.data() + h * d, x, d) + static_cast<double>(b1_[h]);
  }
}

ProbabilityVector MlpModel::predict(const ImageTensor& image) const {
  check_input(image);
  std::vector<double> pre;
  hidden_preactivation(image, pre);
  std::vector<double> logits(classes_);
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = static_cast<double>(b2_[c]);
    for (std::size_t h = 0; h < hidden_; ++h) {
      z += static_cast<double>(w2_[c * hidden_ + h]) * std::max(pre[h], 0.0);
    }
    logits[c] = z;
  }
  return softmax(logits);
}

MlpGradients MlpModel::backward(const ImageTensor& image, std::size_t label) const {
  check_input(image);
  if (label >= classes_) {
    throw InvalidArgument(fmt::format("label {} out of range for {} classes", label, classes_));
  }
  const std::size_t d = shape_.flat_size();
  std::vector<double> pre;
  hidden_preactivation(image, pre);
  std::vector<double> act(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) act[h] = std::max(pre[h], 0.0);

  std::vector<double> logits(classes_);
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = static_cast<double>(b2_[c]);
    for (std::size_t h = 0; h < hidden_; ++h) {
      z += static_cast<double>(w2_[c * hidden_ + h]) * act[h];
    }
    logits[c] = z;
  }
  const ProbabilityVector probs = softmax(logits);

  MlpGradients g;
  g.loss = cross_entropy(probs, label);
  g.b2.resize(classes_);
  for (std::size_t c = 0; c < classes_; ++c) g.b2[c] = probs[c] - (c == label ? 1.0 : 0.0);

  g.w2.resize(classes_ * hidden_);
  std::vector<double> d_act(hidden_, 0.0);
  for (std::size_t c = 0; c < classes_; ++c) {
    for (std::size_t h = 0; h < hidden_; ++h) {
      g.w2[c * hidden_ + h] = g.b2[c] * act[h];
      d_act[h] += static_cast<double>(w2_[c * hidden_ + h]) * g.b2[c];
    }
  }

  g.b1.resize(hidden_);
  for (std::size_t h = 0; h < hidden_; ++h) g.b1[h] = pre[h] > 0.0 ? d_act[h] : 0.0;

  const auto x = image.data();
  g.w1.resize(hidden_ * d);
  g.input.assign(d, 0.0);
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double dh = g.b1[h];
    double* row = g.w1.data() + h * d;
    const float* wrow = w1_.data() + h * d;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = dh * static_cast<double>(x[j]);
      g.input[j] += static_cast<double>(wrow[j]) * dh;
    }
  }
  return g;
}

SaliencyMap gradient_saliency(const MlpModel& model, const ImageTensor& image, std::size_t label) {
  const MlpGradients g = model.backward(image, label);
  SaliencyMap map{image.height(), image.width(),
                  std::vector<double>(image.height() * image.width(), 0.0)};
  const std::size_t c = image.channels();
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) map.values[i] += std::abs(g.input[i * c + ch]);
  }
  return map;
}

// Checkpoint layout: "PCMLP1", u32 H W C hidden classes, float32 W1 b1 W2 b2; little-endian.
namespace {

constexpr std::array<char, 6> kMagic{'P', 'C', 'M', 'L', 'P', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_floats(std::vector<std::uint8_t>& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  void floats(std::span<float> out) {
    for (float& f : out) {
      f = std::bit_cast<float>(u32());
      if (!std::isfinite(f)) throw FormatError(fmt::format("non-finite parameter before byte {}", pos_));
    }
  }

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(fmt::format("model file truncated at byte {}", bytes_.size()));
    }
  }

  std::size_t pos() const noexcept { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> MlpModel::serialize() const {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(shape_.height));
  put_u32(out, static_cast<std::uint32_t>(shape_.width));
  put_u32(out, static_cast<std::uint32_t>(shape_.channels));
  put_u32(out, static_cast<std::uint32_t>(hidden_));
  put_u32(out, static_cast<std::uint32_t>(classes_));
  put_floats(out, w1_);
  put_floats(out, b1_);
  put_floats(out, w2_);
  put_floats(out, b2_);
  return out;
}

MlpModel MlpModel::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  in.need(kMagic.size());
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw FormatError("model file: bad magic");
  }
  in.skip(kMagic.size());
  InputShape shape;
  shape.height = in.u32();
  shape.width = in.u32();
  shape.channels = in.u32();
  const std::size_t hidden = in.u32();
  const std::size_t classes = in.u32();
  const std::size_t params =
      hidden * shape.flat_size() + hidden + classes * hidden + classes;
  in.need(params * 4);
  MlpModel model(shape, hidden, classes);
  in.floats(model.w1_);
  in.floats(model.b1_);
  in.floats(model.w2_);
  in.floats(model.b2_);
  if (in.pos() != bytes.size()) {
    throw FormatError(fmt::format("model file: trailing data at byte {}", in.pos()));
  }
  return model;
}

void MlpModel::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace pcert
