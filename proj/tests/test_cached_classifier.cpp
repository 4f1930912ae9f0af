#include <doctest.h>

#include <atomic>
#include <thread>

#include "pcert/cached_classifier.hpp"
#include "pcert/parallel.hpp"
#include "support.hpp"

using namespace pcert;

namespace {

class CountingClassifier final : public Classifier {
 public:
  explicit CountingClassifier(const Classifier& inner) : inner_(inner) {}
  std::size_t class_count() const override { return inner_.class_count(); }
  ProbabilityVector predict(const ImageTensor& image) const override {
    calls.fetch_add(1);
    return inner_.predict(image);
  }
  mutable std::atomic<std::size_t> calls{0};

 private:
  const Classifier& inner_;
};

}  // namespace

TEST_CASE("memoization and counters") {
  const MlpModel model = testing::random_mlp({16, 16, 1}, 6, 3, 1);
  CountingClassifier counting(model);
  CachedClassifier cache(counting);
  const ImageId id = cache.register_image(testing::random_image(16, 16, 1, 2));
  const MaskRect a{0, 0, 8, 8};
  const MaskRect b{4, 4, 8, 8};
  const MaskRect inner{1, 1, 3, 3};

  const std::vector<MaskRect> ab{a, b};
  const std::vector<MaskRect> ba{b, a};
  const ProbabilityVector first = cache.predict(id, ab);
  CHECK(cache.scheduled_evaluations() == 1);
  CHECK(cache.unique_evaluations() == 1);
  CHECK(cache.predict(id, ab) == first);
  CHECK(cache.predict(id, ba) == first);
  CHECK(cache.scheduled_evaluations() == 3);
  CHECK(cache.unique_evaluations() == 1);
  CHECK(counting.calls.load() == 1);

  const std::vector<MaskRect> just_a{a};
  const std::vector<MaskRect> a_inner{a, inner};
  CHECK(cache.lookup(id, just_a).evaluated);
  const auto hit = cache.lookup(id, a_inner);
  CHECK_FALSE(hit.evaluated);
  CHECK(cache.unique_evaluations() == 2);

  // Cache transparency: identical to a direct call on the masked image.
  CHECK(first == model.predict(apply_masks(cache.image(id), ab)));
  CHECK_THROWS_AS(cache.predict(7, ab), InvalidArgument);
}

TEST_CASE("images are cached independently") {
  const testing::ConstantClassifier c(3, 1);
  CountingClassifier counting(c);
  CachedClassifier cache(counting);
  const ImageId x = cache.register_image(ImageTensor(8, 8, 1, 0.5f));
  const ImageId y = cache.register_image(ImageTensor(8, 8, 1, 0.5f));
  const MaskRect m{0, 0, 2, 2};
  cache.predict(x, std::span(&m, 1));
  cache.predict(y, std::span(&m, 1));
  CHECK(cache.unique_evaluations() == 2);
}

TEST_CASE("fill value is part of the key") {
  const MlpModel model = testing::random_mlp({8, 8, 1}, 4, 2, 3);
  CachedClassifier zero(model, 0.0f);
  CachedClassifier half(model, 0.5f);
  const ImageTensor img = testing::random_image(8, 8, 1, 4);
  const MaskRect m{2, 2, 4, 4};
  const ImageId a = zero.register_image(img);
  const ImageId b = half.register_image(img);
  CHECK(zero.predict(a, std::span(&m, 1)) == model.predict(apply_masks(img, std::span(&m, 1), 0.0f)));
  CHECK(half.predict(b, std::span(&m, 1)) == model.predict(apply_masks(img, std::span(&m, 1), 0.5f)));
}

TEST_CASE("concurrent lookups count exactly") {
  const MlpModel model = testing::random_mlp({16, 16, 1}, 8, 3, 5);
  CountingClassifier counting(model);
  CachedClassifier cache(counting);
  const ImageId id = cache.register_image(testing::random_image(16, 16, 1, 6));
  const MaskSet set = build_mask_set(16, 3, 3);
  constexpr std::size_t kRepeats = 6;
  std::atomic<std::size_t> evaluated{0};
  parallel_for(set.size() * set.size() * kRepeats, 8, [&](std::size_t t) {
    const std::size_t pair = t % (set.size() * set.size());
    const std::vector<MaskRect> masks{set[pair / set.size()], set[pair % set.size()]};
    if (cache.lookup(id, masks).evaluated) evaluated.fetch_add(1);
  });
  CHECK(cache.scheduled_evaluations() == set.size() * set.size() * kRepeats);
  CHECK(cache.unique_evaluations() == 45);
  CHECK(evaluated.load() == 45);
  CHECK(counting.calls.load() == 45);
  std::size_t entries = 0;
  cache.for_each_entry(id, [&](const ComboKey&, const ProbabilityVector&) { ++entries; });
  CHECK(entries == 45);
}

TEST_CASE("inner failures propagate and are not cached") {
  class Failing final : public Classifier {
   public:
    std::size_t class_count() const override { return 2; }
    ProbabilityVector predict(const ImageTensor&) const override {
      if (fail) throw std::runtime_error("boom");
      return {0.5, 0.5};
    }
    mutable bool fail = true;
  } failing;
  CachedClassifier cache(failing);
  const ImageId id = cache.register_image(ImageTensor(4, 4, 1, 0.5f));
  CHECK_THROWS_AS(cache.predict(id, {}), std::runtime_error);
  failing.fail = false;
  CHECK(cache.predict(id, {}) == ProbabilityVector{0.5, 0.5});
}
