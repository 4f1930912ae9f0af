#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "finite_difference.hpp"
#include "pcert/classifier.hpp"
#include "support.hpp"

using namespace pcert;

TEST_CASE("cross entropy") {
  const std::vector<double> sure{0.0, 1.0, 0.0};
  CHECK(cross_entropy(sure, 1) == 0.0);
  const std::vector<double> uniform(4, 0.25);
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  const double clamped = cross_entropy(sure, 0);
  CHECK(std::isfinite(clamped));
  CHECK(clamped == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(clamped == doctest::Approx(27.631021115928547));
  CHECK_THROWS_AS(cross_entropy(sure, 3), InvalidArgument);
}

TEST_CASE("softmax and labels") {
  const std::vector<double> huge{1e4, -1e4, 0.0};
  const ProbabilityVector p = softmax(huge);
  for (double v : p) CHECK(std::isfinite(v));
  CHECK(p[0] == doctest::Approx(1.0));
  const std::vector<double> tie{0.2, 0.4, 0.4};
  CHECK(predicted_label(tie) == 1);
}

TEST_CASE("zero model is uniform") {
  const MlpModel m({4, 4, 1}, 8, 5);
  const ProbabilityVector p = m.predict(testing::random_image(4, 4, 1, 1));
  for (double v : p) CHECK(v == doctest::Approx(0.2));
}

TEST_CASE("forward output is a distribution") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MlpModel m = testing::random_mlp({6, 6, 3}, 16, 7, s, 1.0f);
    const ProbabilityVector p = m.predict(testing::random_image(6, 6, 3, s + 50));
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double v : p) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("forward agrees with the reference implementation") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const MlpModel m = testing::random_mlp({5, 5, 1}, 12, 4, s, 0.5f);
    const ImageTensor img = testing::random_image(5, 5, 1, s + 7);
    const testing::ReferenceMlp ref(m);
    const ProbabilityVector p = m.predict(img);
    for (std::size_t c = 0; c < 4; ++c) {
      const double loss = ref.loss({img.data().begin(), img.data().end()}, c);
      CHECK(cross_entropy(p, c) == doctest::Approx(loss).epsilon(1e-12));
    }
  }
}

TEST_CASE("forward golden value") {
  // Recorded once from this implementation; guards against silent changes in
  // initialization or accumulation order.
  const MlpModel m = MlpModel::initialized({4, 4, 1}, 8, 3, 42);
  ImageTensor img(4, 4, 1);
  for (std::size_t i = 0; i < img.size(); ++i) img.mutable_data()[i] = static_cast<float>(i) / 16.0f;
  const ProbabilityVector p = m.predict(img);
  const ProbabilityVector again = m.predict(img);
  CHECK(p == again);
  CHECK(p[0] == doctest::Approx(0.70828496028863619).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.20646158808302559).epsilon(1e-15));
}

TEST_CASE("dimension mismatch") {
  const MlpModel m({4, 4, 1}, 8, 3);
  CHECK_THROWS_AS(m.predict(ImageTensor(4, 5, 1)), DimensionMismatch);
  CHECK_THROWS_AS(m.backward(ImageTensor(4, 4, 2), 0), DimensionMismatch);
  CHECK_THROWS_AS(m.backward(ImageTensor(4, 4, 1), 3), InvalidArgument);
  CHECK_THROWS_AS(MlpModel({4, 4, 1}, 8, 1), InvalidArgument);
}

TEST_CASE("backward matches central differences") {
  std::size_t checked = 0;
  for (std::uint64_t s = 0; checked < 30; ++s) {
    const MlpModel m = testing::random_mlp({3, 4, 2}, 5, 3, s, 0.3f);
    const ImageTensor img = testing::random_image(3, 4, 2, s + 900);
    if (testing::kink_margin(m, img) < 1e-3) continue;
    const auto r = testing::check_gradients(m, img, s % 3, 1e-4, 1e-12);
    CHECK(r.max_relative_error < 1e-4);
    ++checked;
  }
}

TEST_CASE("confident correct prediction has no output-layer gradient") {
  MlpModel m({2, 2, 1}, 2, 2);
  // Bias pushes class 1 so hard that its softmax probability rounds to one.
  m.b2()[1] = 1000.0f;
  const MlpGradients g = m.backward(ImageTensor(2, 2, 1, 0.5f), 1);
  for (double v : g.w2) CHECK(v == 0.0);
  for (double v : g.b2) CHECK(v == 0.0);
  CHECK(g.loss == 0.0);
}

TEST_CASE("symmetric weights give symmetric input gradients") {
  // Rows 0 and 1 of a 2x3 image carry identical weights, so identical pixel
  // rows must receive identical gradients.
  MlpModel m = testing::random_mlp({2, 3, 1}, 4, 3, 11, 0.2f);
  auto w1 = m.w1();
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t x = 0; x < 3; ++x) w1[j * 6 + 3 + x] = w1[j * 6 + x];
  }
  ImageTensor img(2, 3, 1);
  for (std::size_t x = 0; x < 3; ++x) img.at(0, x) = img.at(1, x) = 0.2f + 0.3f * static_cast<float>(x);
  const MlpGradients g = m.backward(img, 2);
  for (std::size_t x = 0; x < 3; ++x) CHECK(g.input[x] == g.input[3 + x]);
}

TEST_CASE("saliency is the absolute input gradient") {
  const MlpModel m = testing::random_mlp({3, 3, 2}, 6, 3, 5, 0.2f);
  const ImageTensor img = testing::random_image(3, 3, 2, 6);
  const SaliencyMap s = gradient_saliency(m, img, 1);
  const MlpGradients g = m.backward(img, 1);
  REQUIRE(s.values.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(s.values[i] == doctest::Approx(std::abs(g.input[2 * i]) + std::abs(g.input[2 * i + 1])));
    CHECK(s.values[i] >= 0.0);
  }
}

TEST_CASE("model file round trip") {
  const MlpModel m = testing::random_mlp({4, 3, 2}, 5, 3, 21, 0.4f);
  const auto bytes = m.serialize();
  const std::size_t floats = 5 * 24 + 5 + 3 * 5 + 3;
  CHECK(bytes.size() == 6 + 5 * 4 + floats * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "PCMLP1");
  // u32 fields are little-endian.
  CHECK(bytes[6] == 4);
  CHECK(bytes[7] == 0);
  CHECK(bytes[10] == 3);
  CHECK(MlpModel::deserialize(bytes) == m);

  const auto path = std::filesystem::temp_directory_path() / "pcert_model_roundtrip.bin";
  m.save(path);
  const MlpModel back = MlpModel::load(path);
  CHECK(back == m);
  CHECK(back.serialize() == bytes);
  std::filesystem::remove(path);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(MlpModel::deserialize(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(MlpModel::deserialize(trailing), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(MlpModel::deserialize(bad_magic), FormatError);
}
