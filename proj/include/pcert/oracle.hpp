#pragma once

// Brute-force verifiers that share no search code with the strategies and
// defense: exhaustive worst pair, covering mutation, patch-attack simulation.

#include <cstdint>
#include <string>
#include <vector>

#include "pcert/classifier.hpp"
#include "pcert/defense.hpp"
#include "pcert/mask_geometry.hpp"

namespace pcert {

struct WorstPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double loss = 0.0;
  std::size_t evaluations = 0;
};

/// Maximizes loss over unordered pairs (i <= j) by direct classifier calls.
/// Ties go to the lexicographically smallest pair.
WorstPair exhaustive_worst_pair(const ImageTensor& image, std::size_t label,
                                const Classifier& classifier, const MaskSet& set,
                                float fill = 0.0f);

struct PatchFill {
  std::string name;
  std::vector<float> values;  // p x p, row-major, applied to every channel
};

/// zeros, ones, checkerboard, then `random_count` seeded uniform fills.
std::vector<PatchFill> make_patch_dictionary(int p, std::size_t random_count = 8,
                                             std::uint64_t seed = 0);

struct Violation {
  std::size_t image_id = 0;
  int x = 0;
  int y = 0;
  std::string fill;
  std::size_t defended_label = 0;
  std::size_t true_label = 0;

  friend auto operator<=>(const Violation&, const Violation&) = default;
};

struct AttackReport {
  /// Sorted by (y, x, fill index).
  std::vector<Violation> violations;
  std::size_t variants_visited = 0;
  /// Predictions on combos whose masks hide the patch, compared bit-for-bit
  /// against the same combo on the clean image.
  std::size_t covered_predictions_checked = 0;
  std::size_t covered_prediction_mismatches = 0;
};

struct AttackOptions {
  std::size_t image_id = 0;
  std::size_t threads = 1;
  float fill = 0.0f;
  DisagreerPolicy policy = DisagreerPolicy::kDistinctLabel;
};

/// Pastes every dictionary fill at every patch location and runs the defended
/// prediction on each variant.
AttackReport attack_simulate(const ImageTensor& image, std::size_t label,
                             const Classifier& classifier, const MaskSet& set, int p,
                             const std::vector<PatchFill>& dictionary,
                             const AttackOptions& options = {});

/// Same offsets, every mask side changed by `delta` and clipped to the image.
MaskSet resize_masks(const MaskSet& set, int delta);

struct MutationReport {
  bool original_covers = false;
  bool shrunk_covers = false;
  bool enlarged_covers = false;
};

MutationReport covering_mutation_report(const MaskSet& set, int p);

/// Over (224,39,3), (224,39,6), (32,5,3), (32,5,6): unmodified and enlarged
/// sets cover, and shrinking by one pixel breaks covering for at least one.
bool covering_mutation_check();

}  // namespace pcert
