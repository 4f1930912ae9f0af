#pragma once

// Train-time mask selection: random baselines, saliency-guided cutout, and the
// loss-driven searches (greedy, multi-size greedy, exhaustive grid).

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pcert/cached_classifier.hpp"
#include "pcert/mask_geometry.hpp"

namespace pcert {

using Rng = std::mt19937_64;

struct AugmentedCopy {
  ImageTensor image;
  /// Mask set the ids refer to ("3x3", "6x6", ...) or "free" for unindexed masks.
  std::string mask_set;
  std::vector<std::size_t> mask_ids;
  std::vector<MaskRect> masks;
  /// Loss of the classifier on `image`; empty when the strategy never queried one.
  std::optional<double> loss;
};

struct StrategyOutcome {
  std::vector<AugmentedCopy> copies;
  std::size_t scheduled_evaluations = 0;
  std::size_t unique_evaluations = 0;
  std::vector<std::string> warnings;
};

/// `count` squares of `side` (default round(128 / 224 * n)) with centers uniform
/// over the image, clipped to it.
StrategyOutcome random_cutout(const ImageTensor& image, Rng& rng, std::optional<int> side = {},
                              int count = 2, float fill = 0.0f);

/// One copy per set, each with two mask ids drawn uniformly with replacement.
StrategyOutcome rand_cert(const ImageTensor& image, Rng& rng,
                          const std::vector<const MaskSet*>& sets, float fill = 0.0f);

/// Two rounds: the mask with the largest summed saliency, then (with saliency
/// under it zeroed) the best other mask. Ties go to the smallest id.
StrategyOutcome saliency_cutout(const ImageTensor& image, const SaliencyMap& saliency,
                                const MaskSet& set, float fill = 0.0f);

/// Best single mask, then its best partner among the other k^2 - 1 masks.
StrategyOutcome greedy_cutout(CachedClassifier& cache, ImageId id, std::size_t label,
                              const MaskSet& set);

/// Coarse-to-fine two-round greedy search yielding two copies (coarse pair and
/// fine pair); 26 scheduled evaluations.
StrategyOutcome multisize_greedy(CachedClassifier& cache, ImageId id, std::size_t label,
                                 const MaskSet& coarse, const MaskSet& fine,
                                 const NestingMap& nesting);

/// Worst pair over all unordered pairs including the diagonal.
StrategyOutcome grid_search(CachedClassifier& cache, ImageId id, std::size_t label,
                            const MaskSet& set);

enum class StrategyKind {
  kNone,
  kRandom,
  kRand3,
  kRand6,
  kRand,
  kSaliency,
  kGreedy3,
  kGreedy6,
  kMultisize,
  kGrid3,
  kGrid6,
};

std::string_view strategy_name(StrategyKind kind);
/// Throws InvalidArgument for unknown names.
StrategyKind parse_strategy(std::string_view name);
bool strategy_uses_classifier(StrategyKind kind);

using SaliencyProvider = std::function<SaliencyMap(const ImageTensor&, std::size_t label)>;

/// Mask sets and parameters shared by every strategy for one image geometry.
class StrategyContext {
 public:
  StrategyContext(int image_side, int patch_side, float fill = 0.0f);

  const MaskSet& coarse() const noexcept { return coarse_; }
  const MaskSet& fine() const noexcept { return fine_; }
  /// Throws NestingUnavailable when the sets do not nest.
  const NestingMap& nesting() const;
  float fill() const noexcept { return fill_; }

  int saliency_k = 3;
  std::optional<int> random_side;
  int random_count = 2;

 private:
  MaskSet coarse_;
  MaskSet fine_;
  std::optional<NestingMap> nesting_;
  std::string nesting_error_;
  float fill_;
};

/// Runs `kind` on the registered image `id`. `saliency` is required for kSaliency.
StrategyOutcome run_strategy(StrategyKind kind, const StrategyContext& ctx, CachedClassifier& cache,
                             ImageId id, std::size_t label, Rng& rng,
                             const SaliencyProvider& saliency = {});

}  // namespace pcert
