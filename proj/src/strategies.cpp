#include "pcert/strategies.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace pcert {

namespace {

std::string set_label(const MaskSet& set) { return fmt::format("{}x{}", set.k(), set.k()); }

// Larger loss wins; equal losses keep the earlier (smaller) id.
struct Best {
  std::size_t id = std::numeric_limits<std::size_t>::max();
  double loss = -1.0;

  void offer(std::size_t candidate, double value) {
    if (value > loss || (value == loss && candidate < id)) {
      id = candidate;
      loss = value;
    }
  }
};

// Counts every query against the outcome it contributes to.
class Evaluator {
 public:
  Evaluator(CachedClassifier& cache, ImageId id, std::size_t label, StrategyOutcome& out)
      : cache_(cache), id_(id), label_(label), out_(out) {
    if (label >= cache.class_count()) {
      throw InvalidArgument(fmt::format("label {} out of range for {} classes", label,
                                        cache.class_count()));
    }
  }

  double loss(std::initializer_list<MaskRect> masks) {
    const std::vector<MaskRect> list(masks);
    auto result = cache_.lookup(id_, list);
    ++out_.scheduled_evaluations;
    if (result.evaluated) ++out_.unique_evaluations;
    return cross_entropy(result.probs, label_);
  }

  AugmentedCopy copy(const MaskSet& set, std::vector<std::size_t> ids, double loss) const {
    std::vector<MaskRect> rects;
    for (std::size_t m : ids) rects.push_back(set[m]);
    return AugmentedCopy{apply_masks(cache_.image(id_), rects, cache_.fill()), set_label(set),
                         std::move(ids), std::move(rects), loss};
  }

 private:
  CachedClassifier& cache_;
  ImageId id_;
  std::size_t label_;
  StrategyOutcome& out_;
};

}  // namespace

StrategyOutcome random_cutout(const ImageTensor& image, Rng& rng, std::optional<int> side,
                              int count, float fill) {
  const int n = static_cast<int>(std::max(image.height(), image.width()));
  const int s = side.value_or(static_cast<int>(std::lround(128.0 / 224.0 * n)));
  if (s < 1) throw InvalidArgument("cutout side must be at least 1");
  if (count < 0) throw InvalidArgument("cutout count must be non-negative");

  std::uniform_int_distribution<int> cx(0, static_cast<int>(image.width()) - 1);
  std::uniform_int_distribution<int> cy(0, static_cast<int>(image.height()) - 1);
  AugmentedCopy copy;
  copy.mask_set = "free";
  for (int i = 0; i < count; ++i) {
    const int x = cx(rng);
    const int y = cy(rng);
    const MaskRect square{x - s / 2, y - s / 2, s, s};
    if (auto clipped = clip_rect(square, image.width(), image.height())) {
      copy.masks.push_back(*clipped);
    }
  }
  copy.image = apply_masks(image, copy.masks, fill);
  StrategyOutcome out;
  out.copies.push_back(std::move(copy));
  return out;
}

StrategyOutcome rand_cert(const ImageTensor& image, Rng& rng,
                          const std::vector<const MaskSet*>& sets, float fill) {
  if (sets.empty()) throw InvalidArgument("rand_cert needs at least one mask set");
  StrategyOutcome out;
  for (const MaskSet* set : sets) {
    std::uniform_int_distribution<std::size_t> pick(0, set->size() - 1);
    AugmentedCopy copy;
    copy.mask_set = set_label(*set);
    for (int draw = 0; draw < 2; ++draw) {
      const std::size_t id = pick(rng);
      copy.mask_ids.push_back(id);
      copy.masks.push_back((*set)[id]);
    }
    copy.image = apply_masks(image, copy.masks, fill);
    out.copies.push_back(std::move(copy));
  }
  return out;
}

StrategyOutcome saliency_cutout(const ImageTensor& image, const SaliencyMap& saliency,
                                const MaskSet& set, float fill) {
  if (saliency.height != image.height() || saliency.width != image.width() ||
      saliency.values.size() != saliency.height * saliency.width) {
    throw DimensionMismatch("saliency map does not match image dimensions");
  }
  std::vector<double> map = saliency.values;
  for (double v : map) {
    if (!(v >= 0.0)) throw InvalidArgument("saliency values must be non-negative");
  }
  auto mass = [&](const MaskRect& r) {
    double total = 0.0;
    for (int y = r.y0; y < r.y1(); ++y) {
      for (int x = r.x0; x < r.x1(); ++x) total += map[static_cast<std::size_t>(y) * saliency.width + static_cast<std::size_t>(x)];
    }
    return total;
  };

  Best first;
  for (std::size_t m = 0; m < set.size(); ++m) first.offer(m, mass(set[m]));
  std::vector<std::size_t> ids{first.id};

  StrategyOutcome out;
  if (set.size() > 1) {
    const MaskRect& r = set[first.id];
    for (int y = r.y0; y < r.y1(); ++y) {
      for (int x = r.x0; x < r.x1(); ++x) map[static_cast<std::size_t>(y) * saliency.width + static_cast<std::size_t>(x)] = 0.0;
    }
    Best second;
    for (std::size_t m = 0; m < set.size(); ++m) {
      if (m != first.id) second.offer(m, mass(set[m]));
    }
    ids.push_back(second.id);
  } else {
    out.warnings.push_back("single-mask set: second round skipped");
  }

  AugmentedCopy copy;
  copy.mask_set = set_label(set);
  for (std::size_t id : ids) copy.masks.push_back(set[id]);
  copy.mask_ids = std::move(ids);
  copy.image = apply_masks(image, copy.masks, fill);
  out.copies.push_back(std::move(copy));
  return out;
}

StrategyOutcome greedy_cutout(CachedClassifier& cache, ImageId id, std::size_t label,
                              const MaskSet& set) {
  StrategyOutcome out;
  Evaluator eval(cache, id, label, out);

  Best first;
  for (std::size_t m = 0; m < set.size(); ++m) first.offer(m, eval.loss({set[m]}));

  if (set.size() == 1) {
    out.warnings.push_back("degenerate mask set (k=1): second round is empty");
    out.copies.push_back(eval.copy(set, {first.id}, first.loss));
    return out;
  }

  Best second;
  for (std::size_t m = 0; m < set.size(); ++m) {
    if (m != first.id) second.offer(m, eval.loss({set[first.id], set[m]}));
  }
  out.copies.push_back(eval.copy(set, {first.id, second.id}, second.loss));
  return out;
}

StrategyOutcome multisize_greedy(CachedClassifier& cache, ImageId id, std::size_t label,
                                 const MaskSet& coarse, const MaskSet& fine,
                                 const NestingMap& nesting) {
  if (nesting.size() != coarse.size()) {
    throw NestingUnavailable("nesting map does not match the coarse mask set");
  }
  StrategyOutcome out;
  Evaluator eval(cache, id, label, out);

  // Round 1: worst coarse mask, then the worst of the fine masks nested in it.
  Best coarse1;
  for (std::size_t m = 0; m < coarse.size(); ++m) coarse1.offer(m, eval.loss({coarse[m]}));
  Best fine1;
  for (std::size_t f : nesting[coarse1.id]) fine1.offer(f, eval.loss({fine[f]}));

  // Round 2: partners for the fine mask, first among coarse masks, then among
  // the fine masks nested in the chosen coarse partner.
  const MaskRect& anchor = fine[fine1.id];
  Best coarse2;
  for (std::size_t m = 0; m < coarse.size(); ++m) coarse2.offer(m, eval.loss({anchor, coarse[m]}));
  Best fine2;
  for (std::size_t f : nesting[coarse2.id]) fine2.offer(f, eval.loss({anchor, fine[f]}));

  // The coarse pair itself is never queried, so its copy carries no loss.
  AugmentedCopy coarse_copy = eval.copy(coarse, {coarse1.id, coarse2.id}, 0.0);
  coarse_copy.loss.reset();
  out.copies.push_back(std::move(coarse_copy));
  out.copies.push_back(eval.copy(fine, {fine1.id, fine2.id}, fine2.loss));
  return out;
}

StrategyOutcome grid_search(CachedClassifier& cache, ImageId id, std::size_t label,
                            const MaskSet& set) {
  StrategyOutcome out;
  Evaluator eval(cache, id, label, out);
  double best_loss = -1.0;
  std::size_t best_i = 0;
  std::size_t best_j = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i; j < set.size(); ++j) {
      const double loss = eval.loss({set[i], set[j]});
      if (loss > best_loss) {
        best_loss = loss;
        best_i = i;
        best_j = j;
      }
    }
  }
  out.copies.push_back(eval.copy(set, {best_i, best_j}, best_loss));
  return out;
}

namespace {

constexpr std::array<std::pair<StrategyKind, std::string_view>, 11> kStrategyNames{{
    {StrategyKind::kNone, "none"},
    {StrategyKind::kRandom, "random"},
    {StrategyKind::kRand3, "rand3"},
    {StrategyKind::kRand6, "rand6"},
    {StrategyKind::kRand, "rand"},
    {StrategyKind::kSaliency, "saliency"},
    {StrategyKind::kGreedy3, "greedy3"},
    {StrategyKind::kGreedy6, "greedy6"},
    {StrategyKind::kMultisize, "multisize"},
    {StrategyKind::kGrid3, "grid3"},
    {StrategyKind::kGrid6, "grid6"},
}};

}  // namespace

std::string_view strategy_name(StrategyKind kind) {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kStrategyNames) {
    if (n == name) return k;
  }
  throw InvalidArgument(fmt::format("unknown strategy '{}'", name));
}

bool strategy_uses_classifier(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kGreedy3:
    case StrategyKind::kGreedy6:
    case StrategyKind::kMultisize:
    case StrategyKind::kGrid3:
    case StrategyKind::kGrid6:
      return true;
    default:
      return false;
  }
}

StrategyContext::StrategyContext(int image_side, int patch_side, float fill)
    : coarse_(build_mask_set(image_side, patch_side, 3)),
      fine_(build_mask_set(image_side, patch_side, 6)),
      fill_(fill) {
  try {
    nesting_.emplace(build_nesting_map(coarse_, fine_));
  } catch (const NestingUnavailable& e) {
    nesting_error_ = e.what();
  }
}

const NestingMap& StrategyContext::nesting() const {
  if (!nesting_) throw NestingUnavailable(nesting_error_);
  return *nesting_;
}

StrategyOutcome run_strategy(StrategyKind kind, const StrategyContext& ctx, CachedClassifier& cache,
                             ImageId id, std::size_t label, Rng& rng,
                             const SaliencyProvider& saliency) {
  const ImageTensor& image = cache.image(id);
  const float fill = cache.fill();
  switch (kind) {
    case StrategyKind::kNone: {
      StrategyOutcome out;
      out.copies.push_back(AugmentedCopy{image, "free", {}, {}, std::nullopt});
      return out;
    }
    case StrategyKind::kRandom:
      return random_cutout(image, rng, ctx.random_side, ctx.random_count, fill);
    case StrategyKind::kRand3:
      return rand_cert(image, rng, {&ctx.coarse()}, fill);
    case StrategyKind::kRand6:
      return rand_cert(image, rng, {&ctx.fine()}, fill);
    case StrategyKind::kRand:
      return rand_cert(image, rng, {&ctx.coarse(), &ctx.fine()}, fill);
    case StrategyKind::kSaliency: {
      if (!saliency) throw InvalidArgument("saliency strategy needs a saliency provider");
      const MaskSet& set = ctx.saliency_k == 6 ? ctx.fine() : ctx.coarse();
      return saliency_cutout(image, saliency(image, label), set, fill);
    }
    case StrategyKind::kGreedy3:
      return greedy_cutout(cache, id, label, ctx.coarse());
    case StrategyKind::kGreedy6:
      return greedy_cutout(cache, id, label, ctx.fine());
    case StrategyKind::kMultisize:
      return multisize_greedy(cache, id, label, ctx.coarse(), ctx.fine(), ctx.nesting());
    case StrategyKind::kGrid3:
      return grid_search(cache, id, label, ctx.coarse());
    case StrategyKind::kGrid6:
      return grid_search(cache, id, label, ctx.fine());
  }
  throw InvalidArgument("unhandled strategy");
}

}  // namespace pcert
