#include "pcert/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>

#include <fmt/format.h>

namespace pcert {

void LabeledDataset::validate() const {
  if (images.size() != labels.size()) {
    throw InvalidArgument(fmt::format("dataset has {} images but {} labels", images.size(),
                                      labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw InvalidArgument(fmt::format("label {} of sample {} out of range for {} classes",
                                        labels[i], i, class_count));
    }
  }
}

std::vector<float> synth_template(int label, int cue_side) {
  // Periodic patterns: a unit with alternating-sign weights sees the same
  // response magnitude wherever the cue lands, so a small MLP can learn them.
  const int family = label % 4;
  const int period = 1 + label / 4;
  std::vector<float> pattern(static_cast<std::size_t>(cue_side * cue_side));
  for (int y = 0; y < cue_side; ++y) {
    for (int x = 0; x < cue_side; ++x) {
      const int px = (x / period) % 2;
      const int py = (y / period) % 2;
      bool bright = true;
      if (family == 0) bright = px == 0;
      if (family == 1) bright = py == 0;
      if (family == 2) bright = px == py;
      pattern[static_cast<std::size_t>(y * cue_side + x)] = bright ? 1.0f : 0.5f;
    }
  }
  return pattern;
}

SynthDataset generate_synth(const SynthSpec& spec, std::size_t count) {
  if (count < 1) throw InvalidArgument("synthetic dataset needs at least one image");
  if (spec.classes < 1 || spec.cues < 0 || spec.cue_side < 1 || spec.cue_side >= spec.side) {
    throw InvalidArgument("invalid synthetic dataset spec");
  }
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) throw InvalidArgument("noise amplitude outside [0,1]");

  std::vector<std::vector<float>> templates;
  for (int c = 0; c < spec.classes; ++c) templates.push_back(synth_template(c, spec.cue_side));

  constexpr int kPlacementAttempts = 1000;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> noise(0.0, spec.noise);
  std::uniform_int_distribution<int> offset(0, spec.side - spec.cue_side);

  SynthDataset out;
  out.data.class_count = static_cast<std::size_t>(spec.classes);
  const auto side = static_cast<std::size_t>(spec.side);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = i % static_cast<std::size_t>(spec.classes);
    ImageTensor image(side, side, 1);
    for (float& v : image.mutable_data()) v = static_cast<float>(noise(rng));

    std::vector<MaskRect> placed;
    for (int cue = 0; cue < spec.cues; ++cue) {
      bool ok = false;
      for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
        const MaskRect r{offset(rng), offset(rng), spec.cue_side, spec.cue_side};
        ok = std::none_of(placed.begin(), placed.end(),
                          [&](const MaskRect& other) { return other.intersects(r); });
        if (ok) placed.push_back(r);
      }
      if (!ok) {
        throw InvalidArgument(fmt::format("could not place cue {} of image {} without overlap", cue, i));
      }
      const MaskRect& r = placed.back();
      const auto& pattern = templates[label];
      for (int y = 0; y < spec.cue_side; ++y) {
        for (int x = 0; x < spec.cue_side; ++x) {
          image.at(static_cast<std::size_t>(r.y0 + y), static_cast<std::size_t>(r.x0 + x)) =
              pattern[static_cast<std::size_t>(y * spec.cue_side + x)];
        }
      }
    }
    out.data.images.push_back(std::move(image));
    out.data.labels.push_back(label);
    out.cues.push_back(std::move(placed));
  }
  return out;
}

LabeledDataset parse_cifar10_binary(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kSide = 32;
  constexpr std::size_t kPlane = kSide * kSide;
  constexpr std::size_t kRecord = 1 + 3 * kPlane;
  if (bytes.size() % kRecord != 0) {
    throw FormatError(fmt::format("CIFAR-10 file truncated: record at byte offset {} is incomplete "
                                  "({} bytes, records are {} bytes)",
                                  bytes.size() - bytes.size() % kRecord, bytes.size(), kRecord));
  }
  LabeledDataset out;
  out.class_count = 10;
  const std::size_t records = bytes.size() / kRecord;
  out.images.reserve(records);
  out.labels.reserve(records);
  for (std::size_t r = 0; r < records; ++r) {
    const std::size_t base = r * kRecord;
    const std::uint8_t label = bytes[base];
    if (label > 9) {
      throw FormatError(fmt::format("CIFAR-10 label {} > 9 at byte offset {}", label, base));
    }
    std::vector<float> pixels(kPlane * 3);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t p = 0; p < kPlane; ++p) {
        pixels[p * 3 + c] = static_cast<float>(bytes[base + 1 + c * kPlane + p] / 255.0);
      }
    }
    out.images.emplace_back(kSide, kSide, 3, std::move(pixels));
    out.labels.push_back(label);
  }
  return out;
}

LabeledDataset load_cifar10_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_cifar10_binary(bytes);
}

}  // namespace pcert
