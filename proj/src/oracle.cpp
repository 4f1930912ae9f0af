#include "pcert/oracle.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "pcert/cached_classifier.hpp"
#include "pcert/parallel.hpp"

namespace pcert {

namespace {

ImageTensor blank_out(const ImageTensor& image, const MaskRect& a, const MaskRect& b, float fill) {
  ImageTensor out = image;
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      const auto xi = static_cast<int>(x);
      const auto yi = static_cast<int>(y);
      const bool in_a = xi >= a.x0 && xi < a.x0 + a.w && yi >= a.y0 && yi < a.y0 + a.h;
      const bool in_b = xi >= b.x0 && xi < b.x0 + b.w && yi >= b.y0 && yi < b.y0 + b.h;
      if (!in_a && !in_b) continue;
      for (std::size_t c = 0; c < image.channels(); ++c) out.at(y, x, c) = fill;
    }
  }
  return out;
}

}  // namespace

WorstPair exhaustive_worst_pair(const ImageTensor& image, std::size_t label,
                                const Classifier& classifier, const MaskSet& set, float fill) {
  if (label >= classifier.class_count()) throw InvalidArgument("label out of range");
  WorstPair best;
  best.loss = -std::numeric_limits<double>::infinity();
  const auto masks = set.masks();
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (std::size_t j = i; j < masks.size(); ++j) {
      const ProbabilityVector probs = classifier.predict(blank_out(image, masks[i], masks[j], fill));
      ++best.evaluations;
      const double loss = -std::log(std::max(probs[label], 1e-12));
      if (loss > best.loss) {
        best.loss = loss;
        best.first = i;
        best.second = j;
      }
    }
  }
  return best;
}

std::vector<PatchFill> make_patch_dictionary(int p, std::size_t random_count, std::uint64_t seed) {
  if (p < 1) throw InvalidArgument("patch side must be positive");
  const auto area = static_cast<std::size_t>(p) * static_cast<std::size_t>(p);
  std::vector<PatchFill> dict;
  dict.push_back({"zeros", std::vector<float>(area, 0.0f)});
  dict.push_back({"ones", std::vector<float>(area, 1.0f)});
  PatchFill checker{"checkerboard", std::vector<float>(area)};
  for (int y = 0; y < p; ++y) {
    for (int x = 0; x < p; ++x) checker.values[static_cast<std::size_t>(y * p + x)] = ((x + y) % 2 == 0) ? 1.0f : 0.0f;
  }
  dict.push_back(std::move(checker));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  for (std::size_t r = 0; r < random_count; ++r) {
    PatchFill fill{fmt::format("random{}", r), std::vector<float>(area)};
    for (float& v : fill.values) v = std::min(unit(rng), 1.0f);
    dict.push_back(std::move(fill));
  }
  return dict;
}

AttackReport attack_simulate(const ImageTensor& image, std::size_t label,
                             const Classifier& classifier, const MaskSet& set, int p,
                             const std::vector<PatchFill>& dictionary,
                             const AttackOptions& options) {
  const int n = set.image_side();
  if (p < 1 || p > n) throw InvalidArgument(fmt::format("patch side {} outside [1, {}]", p, n));
  if (image.height() != static_cast<std::size_t>(n) || image.width() != static_cast<std::size_t>(n)) {
    throw DimensionMismatch("image does not match the mask set geometry");
  }
  for (const PatchFill& fill : dictionary) {
    if (fill.values.size() != static_cast<std::size_t>(p * p)) {
      throw DimensionMismatch(fmt::format("patch fill '{}' is not {}x{}", fill.name, p, p));
    }
  }

  CachedClassifier clean(classifier, options.fill);
  const ImageId clean_id = clean.register_image(image);

  const int span = n - p + 1;
  const auto locations = static_cast<std::size_t>(span) * static_cast<std::size_t>(span);
  std::vector<std::vector<Violation>> found(locations);
  std::atomic<std::size_t> visited{0};
  std::atomic<std::size_t> checked{0};
  std::atomic<std::size_t> mismatches{0};

  parallel_for(locations, options.threads, [&](std::size_t loc) {
    const int ty = static_cast<int>(loc) / span;
    const int tx = static_cast<int>(loc) % span;
    const MaskRect patch{tx, ty, p, p};
    for (const PatchFill& fill : dictionary) {
      ImageTensor attacked = image;
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          for (std::size_t c = 0; c < image.channels(); ++c) {
            attacked.at(static_cast<std::size_t>(ty + y), static_cast<std::size_t>(tx + x), c) =
                fill.values[static_cast<std::size_t>(y * p + x)];
          }
        }
      }
      CachedClassifier variant(classifier, options.fill);
      const ImageId vid = variant.register_image(std::move(attacked));
      const InferenceResult result = double_masking_infer(variant, vid, set, options.policy);
      visited.fetch_add(1);
      if (result.label != label) {
        found[loc].push_back(Violation{options.image_id, tx, ty, fill.name, result.label, label});
      }
      variant.for_each_entry(vid, [&](const ComboKey& key, const ProbabilityVector& probs) {
        const bool hidden = std::any_of(key.rects.begin(), key.rects.end(),
                                        [&](const MaskRect& r) { return r.contains(patch); });
        if (!hidden) return;
        checked.fetch_add(1);
        if (clean.predict(clean_id, key.rects) != probs) mismatches.fetch_add(1);
      });
    }
  });

  AttackReport report;
  for (auto& v : found) {
    report.violations.insert(report.violations.end(), std::make_move_iterator(v.begin()),
                             std::make_move_iterator(v.end()));
  }
  report.variants_visited = visited.load();
  report.covered_predictions_checked = checked.load();
  report.covered_prediction_mismatches = mismatches.load();
  return report;
}

MaskSet resize_masks(const MaskSet& set, int delta) {
  const int n = set.image_side();
  const int side = std::clamp(set.mask_side() + delta, 1, n);
  std::vector<int> positions;
  for (int pos : set.positions()) {
    const int clamped = std::min(pos, n - side);
    if (positions.empty() || positions.back() != clamped) positions.push_back(clamped);
  }
  return MaskSet::from_positions(n, set.patch_side(), set.stride(), side, std::move(positions));
}

MutationReport covering_mutation_report(const MaskSet& set, int p) {
  MutationReport r;
  r.original_covers = verify_r_covering(set, p).covered;
  r.shrunk_covers = verify_r_covering(resize_masks(set, -1), p).covered;
  r.enlarged_covers = verify_r_covering(resize_masks(set, +1), p).covered;
  return r;
}

bool covering_mutation_check() {
  constexpr std::array<std::array<int, 3>, 4> kSuite{{{224, 39, 3}, {224, 39, 6}, {32, 5, 3}, {32, 5, 6}}};
  bool any_broken = false;
  for (const auto& [n, p, k] : kSuite) {
    const MutationReport r = covering_mutation_report(build_mask_set(n, p, k), p);
    if (!r.original_covers || !r.enlarged_covers) return false;
    any_broken = any_broken || !r.shrunk_covers;
  }
  return any_broken;
}

}  // namespace pcert
