#pragma once

// Double-masking inference, two-mask certification, and dataset-level metrics.

#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "pcert/cached_classifier.hpp"
#include "pcert/dataset.hpp"
#include "pcert/mask_geometry.hpp"

namespace pcert {

enum class InferenceCase {
  kAgreement = 1,           // I: every one-mask prediction agrees
  kUnanimousDisagreer = 2,  // II: a minority prediction survives every second mask
  kMajority = 3,            // III: fall back to the one-mask majority
};

/// "I", "II" or "III".
const char* case_tag(InferenceCase c);

/// How second-round survivors are turned into a decision.
enum class DisagreerPolicy {
  /// Case II iff the unanimous disagreers all carry one label. Sound for
  /// certified images even when overlapping masks both hide the patch.
  kDistinctLabel,
  /// Case II iff exactly one disagreeing mask is unanimous. Can return the
  /// attacker's majority when two masks each fully hide the patch.
  kSingleMask,
};

struct InferenceResult {
  std::size_t label = 0;
  InferenceCase inference_case = InferenceCase::kAgreement;
  std::vector<std::size_t> one_mask_labels;
  std::size_t majority_label = 0;
  /// Minority masks whose every two-mask prediction agreed.
  std::size_t unanimous_disagreers = 0;
  std::size_t scheduled_evaluations = 0;
  std::size_t unique_evaluations = 0;
};

InferenceResult double_masking_infer(CachedClassifier& cache, ImageId id, const MaskSet& set,
                                     DisagreerPolicy policy = DisagreerPolicy::kDistinctLabel);

struct CertificationResult {
  bool certified = false;
  std::size_t label = 0;
  std::size_t combos_evaluated = 0;
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  std::size_t unique_evaluations = 0;
};

/// Certified iff every unordered pair (diagonal included) predicts `label`.
/// Stops at the first failing pair unless `full_enumeration` is set.
CertificationResult certify(CachedClassifier& cache, ImageId id, std::size_t label,
                            const MaskSet& set, bool full_enumeration = false);

struct ImageEvaluation {
  std::size_t true_label = 0;
  InferenceResult inference;
  CertificationResult certification;
  std::size_t unique_evaluations = 0;
};

struct EvaluationMetrics {
  double clean_accuracy = 0.0;
  double certified_robust_accuracy = 0.0;
  std::array<std::size_t, 3> case_histogram{};
  std::size_t total_unique_evaluations = 0;
  std::vector<ImageEvaluation> per_image;
};

/// Runs inference and certification on every image; results do not depend on `threads`.
EvaluationMetrics evaluate(const Classifier& classifier, const LabeledDataset& data,
                           const MaskSet& set, float fill = 0.0f, std::size_t threads = 1,
                           DisagreerPolicy policy = DisagreerPolicy::kDistinctLabel);

}  // namespace pcert
