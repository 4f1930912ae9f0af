#pragma once

// Hand-built classifiers and fixtures shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <vector>

#include "pcert/classifier.hpp"
#include "pcert/mask_geometry.hpp"

namespace pcert::testing {

/// Same probability vector for every input.
class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(std::size_t classes, std::size_t label, double confidence = 0.7)
      : probs_(classes, (1.0 - confidence) / static_cast<double>(classes - 1)) {
    probs_[label] = confidence;
  }
  static ConstantClassifier uniform(std::size_t classes) {
    ConstantClassifier c(classes, 0, 1.0 / static_cast<double>(classes));
    return c;
  }
  std::size_t class_count() const override { return probs_.size(); }
  ProbabilityVector predict(const ImageTensor&) const override { return probs_; }

 private:
  ProbabilityVector probs_;
};

inline ProbabilityVector peaked(std::size_t classes, std::size_t label) {
  ProbabilityVector p(classes, 0.1 / static_cast<double>(classes - 1));
  p[label] = 0.9;
  return p;
}

/// Looks at which masks of `set` are fully blanked (every pixel == 0) and maps
/// that id set to a label. Meant for images without zero pixels of their own.
class MaskLookupClassifier final : public Classifier {
 public:
  using Rule = std::function<std::size_t(const std::set<std::size_t>&)>;
  MaskLookupClassifier(const MaskSet& set, std::size_t classes, Rule rule)
      : masks_(set.masks().begin(), set.masks().end()), classes_(classes), rule_(std::move(rule)) {}

  std::size_t class_count() const override { return classes_; }
  ProbabilityVector predict(const ImageTensor& image) const override {
    std::set<std::size_t> hidden;
    for (std::size_t id = 0; id < masks_.size(); ++id) {
      const MaskRect& r = masks_[id];
      bool blank = true;
      for (int y = r.y0; y < r.y1() && blank; ++y) {
        for (int x = r.x0; x < r.x1() && blank; ++x) {
          blank = image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) == 0.0f;
        }
      }
      if (blank) hidden.insert(id);
    }
    return peaked(classes_, rule_(hidden));
  }

 private:
  std::vector<MaskRect> masks_;
  std::size_t classes_;
  Rule rule_;
};

inline ImageTensor random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed,
                                float lo = 0.05f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  ImageTensor img(h, w, c);
  for (float& v : img.mutable_data()) v = u(rng);
  return img;
}

/// Random MLP with biases filled too, so hidden units are not all aligned.
inline MlpModel random_mlp(InputShape shape, std::size_t hidden, std::size_t classes,
                           std::uint64_t seed, float bias_scale = 0.1f) {
  MlpModel m = MlpModel::initialized(shape, hidden, classes, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<float> u(-bias_scale, bias_scale);
  for (float& b : m.b1()) b = u(rng);
  for (float& b : m.b2()) b = u(rng);
  return m;
}

}  // namespace pcert::testing
