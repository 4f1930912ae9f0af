#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <future>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "pcert/classifier.hpp"
#include "pcert/mask_geometry.hpp"

namespace pcert {

using ImageId = std::size_t;

/// Memoizes predictions on masked copies of registered images.
///
/// Entries are keyed by (image id, canonical_combo_key), so mask lists that
/// produce the same masked image share one inner evaluation. Every query bumps
/// `scheduled_evaluations`; only the query that actually runs the inner
/// classifier bumps `unique_evaluations`. Concurrent queries for the same key
/// wait on the first one instead of evaluating again.
class CachedClassifier {
 public:
  /// `inner` must outlive the cache.
  explicit CachedClassifier(const Classifier& inner, float fill = 0.0f);

  CachedClassifier(const CachedClassifier&) = delete;
  CachedClassifier& operator=(const CachedClassifier&) = delete;

  /// Registration is not thread-safe; register before querying concurrently.
  ImageId register_image(ImageTensor image);
  const ImageTensor& image(ImageId id) const;
  std::size_t image_count() const noexcept { return images_.size(); }

  struct Lookup {
    ProbabilityVector probs;
    bool evaluated = false;  // true iff this call ran the inner classifier
  };

  Lookup lookup(ImageId id, std::span<const MaskRect> masks);
  ProbabilityVector predict(ImageId id, std::span<const MaskRect> masks) {
    return lookup(id, masks).probs;
  }

  std::size_t scheduled_evaluations() const noexcept { return scheduled_.load(); }
  std::size_t unique_evaluations() const noexcept { return unique_.load(); }

  const Classifier& inner() const noexcept { return inner_; }
  float fill() const noexcept { return fill_; }
  std::size_t class_count() const { return inner_.class_count(); }

  /// Visits every completed entry for `id` (unordered).
  void for_each_entry(ImageId id,
                      const std::function<void(const ComboKey&, const ProbabilityVector&)>& fn) const;

 private:
  using Table = std::unordered_map<ComboKey, std::shared_future<ProbabilityVector>, ComboKeyHash>;

  const Classifier& inner_;
  float fill_;
  std::vector<ImageTensor> images_;
  std::vector<Table> tables_;
  mutable std::mutex mutex_;
  std::atomic<std::size_t> scheduled_{0};
  std::atomic<std::size_t> unique_{0};
};

/// Free-function form of `CachedClassifier::predict`.
inline ProbabilityVector cached_predict(CachedClassifier& cache, ImageId id,
                                        std::span<const MaskRect> masks) {
  return cache.predict(id, masks);
}

}  // namespace pcert
