#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "pcert/dataset.hpp"
#include "pcert/train.hpp"
#include "support.hpp"

using namespace pcert;

namespace {

LabeledDataset synth(std::size_t count, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  return generate_synth(spec, count).data;
}

MlpModel fresh(std::size_t hidden = 16, std::uint64_t seed = 1) {
  return MlpModel::initialized({32, 32, 1}, hidden, 4, seed);
}

}  // namespace

TEST_CASE("synthetic dataset") {
  SynthSpec spec;
  spec.seed = 12;
  const SynthDataset a = generate_synth(spec, 8);
  CHECK(a.data.labels == std::vector<std::size_t>{0, 1, 2, 3, 0, 1, 2, 3});
  CHECK(a.data.class_count == 4);
  const SynthDataset b = generate_synth(spec, 8);
  CHECK(a.data.images == b.data.images);
  spec.seed = 13;
  CHECK_FALSE(generate_synth(spec, 8).data.images == a.data.images);

  for (std::size_t i = 0; i < 8; ++i) {
    const auto& cues = a.cues[i];
    REQUIRE(cues.size() == 3);
    for (std::size_t p = 0; p < cues.size(); ++p) {
      for (std::size_t q = p + 1; q < cues.size(); ++q) {
        const MaskRect& r = cues[p];
        const MaskRect& s = cues[q];
        const bool disjoint = r.x1() <= s.x0 || s.x1() <= r.x0 || r.y1() <= s.y0 || s.y1() <= r.y0;
        CHECK(disjoint);
      }
    }
    // Cue pixels carry the class template; the rest is background noise.
    const auto tmpl = synth_template(static_cast<int>(a.data.labels[i]), 6);
    const ImageTensor& img = a.data.images[i];
    for (const MaskRect& r : cues) {
      for (int y = 0; y < 6; ++y) {
        for (int x = 0; x < 6; ++x) {
          CHECK(img.at(static_cast<std::size_t>(r.y0 + y), static_cast<std::size_t>(r.x0 + x)) ==
                tmpl[static_cast<std::size_t>(y * 6 + x)]);
        }
      }
    }
    for (float v : img.data()) CHECK(((v >= 0.0f && v <= 0.1f) || v == 0.5f || v == 1.0f));
  }
  for (int c = 0; c < 4; ++c) {
    for (float v : synth_template(c, 6)) CHECK((v == 0.5f || v == 1.0f));
  }
  CHECK_FALSE(synth_template(0, 6) == synth_template(1, 6));

  SynthSpec crowded;
  crowded.side = 8;
  crowded.cue_side = 6;
  crowded.cues = 3;
  CHECK_THROWS_AS(generate_synth(crowded, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_synth(spec, 0), InvalidArgument);
}

TEST_CASE("cifar-10 binary records") {
  std::vector<std::uint8_t> bytes(2 * 3073);
  bytes[0] = 7;
  bytes[3073] = 2;
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t i = 0; i < 3072; ++i) bytes[r * 3073 + 1 + i] = static_cast<std::uint8_t>((i * 7 + r * 31) % 256);
  }
  const LabeledDataset d = parse_cifar10_binary(bytes);
  REQUIRE(d.size() == 2);
  CHECK(d.labels == std::vector<std::size_t>{7, 2});
  CHECK(d.class_count == 10);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < 32; ++y) {
        for (std::size_t x = 0; x < 32; ++x) {
          const std::uint8_t v = bytes[r * 3073 + 1 + c * 1024 + y * 32 + x];
          CHECK(d.images[r].at(y, x, c) == static_cast<float>(v / 255.0));
        }
      }
    }
  }
  CHECK(parse_cifar10_binary({}).size() == 0);

  const std::vector<std::uint8_t> odd(3074);
  try {
    parse_cifar10_binary(odd);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset 3073") != std::string::npos);
  }
  auto bad_label = bytes;
  bad_label[3073] = 10;
  try {
    parse_cifar10_binary(bad_label);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("offset 3073") != std::string::npos);
  }

  const auto path = std::filesystem::temp_directory_path() / "pcert_cifar_fixture.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK(load_cifar10_binary(path).images == d.images);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_cifar10_binary(path), FormatError);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 0.01;
  for (int e = 0; e < 5; ++e) CHECK(learning_rate_at(cfg, e) == 0.01);
  for (int e = 5; e < 10; ++e) CHECK(learning_rate_at(cfg, e) == doctest::Approx(0.001));
  cfg.epochs = 3;
  CHECK(learning_rate_at(cfg, 0) == 0.01);
  CHECK(learning_rate_at(cfg, 1) == doctest::Approx(0.001));
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK_THROWS_AS(train(MlpModel::initialized({16, 16, 1}, 4, 4, 0), synth(8, 0), TrainConfig{}),
                  DimensionMismatch);
}

TEST_CASE("plain SGD lowers the training loss") {
  const LabeledDataset data = synth(64, 2);
  const MlpModel model = fresh();
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  const double before = mean_loss(model, data);
  const TrainResult r = train(model, data, cfg);
  CHECK(mean_loss(r.model, data) < before);
  REQUIRE(r.log.size() == 6);
  CHECK(r.log[0].learning_rate == 0.05);
  CHECK(r.log[5].learning_rate == doctest::Approx(0.005));
  CHECK(r.log[0].scheduled_evaluations == 0);
  CHECK(r.log[0].loss_terms == 64);
}

TEST_CASE("multi-size greedy pass accounting") {
  const LabeledDataset data = synth(16, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.strategy = StrategyKind::kMultisize;
  const TrainResult r = train(fresh(), data, cfg);
  for (const EpochLog& e : r.log) {
    CHECK(e.batch_scheduled == std::vector<std::size_t>{8 * 26, 8 * 26});
    CHECK(e.scheduled_evaluations == 16 * 26);
    CHECK(e.unique_evaluations <= e.scheduled_evaluations);
    CHECK(e.loss_terms == 32);  // two masked copies per image
  }
}

TEST_CASE("loss term counts per strategy") {
  const LabeledDataset data = synth(8, 4);
  auto terms = [&](StrategyKind k, bool clean) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.strategy = k;
    cfg.include_clean = clean;
    return train(fresh(8), data, cfg).log[0].loss_terms;
  };
  CHECK(terms(StrategyKind::kNone, false) == 8);
  CHECK(terms(StrategyKind::kRandom, false) == 8);
  CHECK(terms(StrategyKind::kRand3, false) == 8);
  CHECK(terms(StrategyKind::kRand, false) == 16);
  CHECK(terms(StrategyKind::kGreedy3, false) == 8);
  CHECK(terms(StrategyKind::kSaliency, false) == 8);
  CHECK(terms(StrategyKind::kRand, true) == 24);
}

TEST_CASE("training is reproducible for any thread count") {
  const LabeledDataset data = synth(24, 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.strategy = StrategyKind::kGreedy3;
  cfg.seed = 77;
  const TrainResult a = train(fresh(), data, cfg);
  const TrainResult b = train(fresh(), data, cfg);
  cfg.threads = 4;
  const TrainResult c = train(fresh(), data, cfg);
  CHECK(a.model == b.model);
  CHECK(a.model == c.model);
  CHECK(a.log[1].mean_loss == c.log[1].mean_loss);
  cfg.seed = 78;
  cfg.strategy = StrategyKind::kRandom;
  const TrainResult d = train(fresh(), data, cfg);
  cfg.seed = 79;
  CHECK_FALSE(train(fresh(), data, cfg).model == d.model);
}

TEST_CASE("frozen reference selection") {
  const LabeledDataset data = synth(16, 6);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.1;
  cfg.strategy = StrategyKind::kGreedy3;
  const TrainResult live = train(fresh(), data, cfg);
  cfg.frozen_reference = true;
  const TrainResult frozen = train(fresh(), data, cfg);
  CHECK(frozen.log.size() == 2);
  CHECK_FALSE(live.model == frozen.model);
}
