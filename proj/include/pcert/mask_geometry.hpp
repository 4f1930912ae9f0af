#pragma once

// Square mask sets that cover every admissible square patch, the coarse-to-fine
// nesting between two such sets, and mask application.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcert/image.hpp"

namespace pcert {

class InfeasibleConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NestingUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Smallest side p with p*p >= fraction * width * height.
int patch_side_from_fraction(int width, int height, double fraction);

/// k x k grid of square masks over an n x n image. Mask ids are row-major:
/// id = row * k + col, with row indexing the y offset and col the x offset.
class MaskSet {
 public:
  /// Builds a set from explicit per-axis offsets without checking coverage.
  static MaskSet from_positions(int image_side, int patch_side, int stride, int mask_side,
                                std::vector<int> positions);

  int image_side() const noexcept { return image_side_; }
  int patch_side() const noexcept { return patch_side_; }
  /// Effective masks per axis (after duplicate offsets are removed).
  int k() const noexcept { return static_cast<int>(positions_.size()); }
  int stride() const noexcept { return stride_; }
  int mask_side() const noexcept { return mask_side_; }
  std::span<const int> positions() const noexcept { return positions_; }
  std::span<const MaskRect> masks() const noexcept { return masks_; }
  std::size_t size() const noexcept { return masks_.size(); }
  const MaskRect& operator[](std::size_t id) const { return masks_.at(id); }

  friend bool operator==(const MaskSet&, const MaskSet&) = default;

 private:
  MaskSet() = default;

  int image_side_ = 0;
  int patch_side_ = 0;
  int stride_ = 0;
  int mask_side_ = 0;
  std::vector<int> positions_;
  std::vector<MaskRect> masks_;
};

/// stride = ceil((n - p + 1) / k), side = stride + p - 1, offsets min(i * stride, n - side).
MaskSet build_mask_set(int n, int p, int k);

struct CoveringReport {
  bool covered = true;
  /// Top-left (x, y) of the first patch placement no mask contains.
  std::optional<std::pair<int, int>> uncovered;

  explicit operator bool() const noexcept { return covered; }
};

/// Brute force over every p x p placement inside the image.
CoveringReport verify_r_covering(const MaskSet& set, int p);

/// For each coarse mask, four fine mask ids (row-major over the per-axis pairs)
/// whose union contains it. Ids may repeat when a single fine offset suffices.
class NestingMap {
 public:
  explicit NestingMap(std::vector<std::array<std::size_t, 4>> fine_ids)
      : fine_ids_(std::move(fine_ids)) {}

  const std::array<std::size_t, 4>& operator[](std::size_t coarse_id) const {
    return fine_ids_.at(coarse_id);
  }
  std::size_t size() const noexcept { return fine_ids_.size(); }

 private:
  std::vector<std::array<std::size_t, 4>> fine_ids_;
};

NestingMap build_nesting_map(const MaskSet& coarse, const MaskSet& fine);

/// Copy of `image` with every pixel (all channels) under any mask set to `fill`.
/// Masks are clipped to the image.
ImageTensor apply_masks(const ImageTensor& image, std::span<const MaskRect> masks,
                        float fill = 0.0f);

/// Identifies the masked image a mask list produces: rectangles contained in
/// another are dropped, the rest sorted, and the fill value appended.
struct ComboKey {
  std::vector<MaskRect> rects;
  std::uint32_t fill_bits = 0;

  friend bool operator==(const ComboKey&, const ComboKey&) = default;
};

struct ComboKeyHash {
  std::size_t operator()(const ComboKey& key) const noexcept;
};

ComboKey canonical_combo_key(std::span<const MaskRect> masks, float fill = 0.0f);

/// Line-oriented text: header "n p k s m", then one offset per line.
std::string to_descriptor(const MaskSet& set);
MaskSet parse_descriptor(std::string_view text);
void save_descriptor(const MaskSet& set, const std::filesystem::path& path);
MaskSet load_descriptor(const std::filesystem::path& path);

}  // namespace pcert
