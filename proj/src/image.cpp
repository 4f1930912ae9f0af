#include "pcert/image.hpp"

#include <algorithm>

namespace pcert {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels, float value)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, value) {
  if (channels == 0) throw InvalidArgument("image must have at least one channel");
  if (!(value >= 0.0f && value <= 1.0f)) throw InvalidArgument("pixel value outside [0,1]");
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels,
                         std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (channels == 0) throw InvalidArgument("image must have at least one channel");
  if (data_.size() != height * width * channels) {
    throw DimensionMismatch("image data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(height) + "x" +
                            std::to_string(width) + "x" + std::to_string(channels));
  }
  if (!in_unit_range()) throw InvalidArgument("pixel value outside [0,1]");
}

bool ImageTensor::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

std::optional<MaskRect> clip_rect(const MaskRect& rect, std::size_t width, std::size_t height) {
  const int x0 = std::max(rect.x0, 0);
  const int y0 = std::max(rect.y0, 0);
  const int x1 = std::min(rect.x1(), static_cast<int>(width));
  const int y1 = std::min(rect.y1(), static_cast<int>(height));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return MaskRect{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace pcert
