#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcert/image.hpp"

namespace pcert {

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return images.size(); }
  /// Throws if lengths differ or a label is out of range.
  void validate() const;
};

/// Grayscale toy images: uniform background noise plus several non-overlapping
/// copies of a per-class template.
struct SynthSpec {
  int side = 32;
  int classes = 4;
  int cues = 3;
  int cue_side = 6;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  LabeledDataset data;
  /// Cue rectangles placed in each image.
  std::vector<std::vector<MaskRect>> cues;
};

/// cue_side x cue_side pattern for `label`: pixels at 1.0 or 0.5, independent of the seed.
/// Labels cycle through vertical stripes, horizontal stripes, checkerboard and
/// solid; every further group of four doubles, triples, ... the period.
std::vector<float> synth_template(int label, int cue_side);

SynthDataset generate_synth(const SynthSpec& spec, std::size_t count);

/// CIFAR-10 binary records: 1 label byte then 3072 channel-planar pixel bytes.
LabeledDataset parse_cifar10_binary(std::span<const std::uint8_t> bytes);
LabeledDataset load_cifar10_binary(const std::filesystem::path& path);

}  // namespace pcert
