#include "pcert/cached_classifier.hpp"

#include <chrono>

#include <fmt/format.h>

namespace pcert {

CachedClassifier::CachedClassifier(const Classifier& inner, float fill) : inner_(inner), fill_(fill) {}

ImageId CachedClassifier::register_image(ImageTensor image) {
  std::lock_guard lock(mutex_);
  images_.push_back(std::move(image));
  tables_.emplace_back();
  return images_.size() - 1;
}

const ImageTensor& CachedClassifier::image(ImageId id) const {
  if (id >= images_.size()) throw InvalidArgument(fmt::format("unknown image id {}", id));
  return images_[id];
}

CachedClassifier::Lookup CachedClassifier::lookup(ImageId id, std::span<const MaskRect> masks) {
  const ImageTensor& base = image(id);
  ComboKey key = canonical_combo_key(masks, fill_);
  scheduled_.fetch_add(1);

  std::promise<ProbabilityVector> promise;
  std::shared_future<ProbabilityVector> pending;
  {
    std::lock_guard lock(mutex_);
    auto& table = tables_[id];
    if (auto it = table.find(key); it != table.end()) {
      pending = it->second;
    } else {
      table.emplace(key, promise.get_future().share());
      unique_.fetch_add(1);
    }
  }
  if (pending.valid()) return Lookup{pending.get(), false};

  try {
    ProbabilityVector probs = inner_.predict(apply_masks(base, key.rects, fill_));
    promise.set_value(probs);
    return Lookup{std::move(probs), true};
  } catch (...) {
    // Waiters already holding the future see the error; later calls retry.
    {
      std::lock_guard lock(mutex_);
      tables_[id].erase(key);
      unique_.fetch_sub(1);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

void CachedClassifier::for_each_entry(
    ImageId id, const std::function<void(const ComboKey&, const ProbabilityVector&)>& fn) const {
  std::lock_guard lock(mutex_);
  if (id >= tables_.size()) throw InvalidArgument(fmt::format("unknown image id {}", id));
  for (const auto& [key, future] : tables_[id]) {
    if (future.wait_for(std::chrono::seconds(0)) == std::future_status::ready) fn(key, future.get());
  }
}

}  // namespace pcert
