#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcert {

/// Thrown for malformed arguments (non-positive sizes, out-of-range labels, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when inputs have incompatible shapes.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an on-disk artifact cannot be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H x W x C pixel grid, channel-last, row-major, values in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels = 1, float value = 0.0f);
  /// Takes ownership of `data`; throws if the length or any value is out of range.
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> mutable_data() noexcept { return data_; }

  float at(std::size_t y, std::size_t x, std::size_t c = 0) const { return data_[index(y, x, c)]; }
  float& at(std::size_t y, std::size_t x, std::size_t c = 0) { return data_[index(y, x, c)]; }

  bool in_unit_range() const noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return (y * width_ + x) * channels_ + c;
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 1;
  std::vector<float> data_;
};

/// Axis-aligned rectangle in pixel coordinates, covering [x0, x0+w) x [y0, y0+h).
struct MaskRect {
  int x0 = 0;
  int y0 = 0;
  int w = 1;
  int h = 1;

  int x1() const noexcept { return x0 + w; }
  int y1() const noexcept { return y0 + h; }

  bool contains(const MaskRect& o) const noexcept {
    return x0 <= o.x0 && y0 <= o.y0 && o.x1() <= x1() && o.y1() <= y1();
  }
  bool intersects(const MaskRect& o) const noexcept {
    return x0 < o.x1() && o.x0 < x1() && y0 < o.y1() && o.y0 < y1();
  }

  friend auto operator<=>(const MaskRect&, const MaskRect&) = default;
};

/// Intersection of `rect` with a width x height image; empty when they do not overlap.
std::optional<MaskRect> clip_rect(const MaskRect& rect, std::size_t width, std::size_t height);

}  // namespace pcert
