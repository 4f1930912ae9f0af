#include "pcert/defense.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "pcert/parallel.hpp"

namespace pcert {

const char* case_tag(InferenceCase c) {
  switch (c) {
    case InferenceCase::kAgreement:
      return "I";
    case InferenceCase::kUnanimousDisagreer:
      return "II";
    case InferenceCase::kMajority:
      return "III";
  }
  return "?";
}

namespace {

struct Counted {
  CachedClassifier& cache;
  ImageId id;
  std::size_t scheduled = 0;
  std::size_t unique = 0;

  std::size_t label(std::initializer_list<MaskRect> masks) {
    const std::vector<MaskRect> list(masks);
    auto result = cache.lookup(id, list);
    ++scheduled;
    if (result.evaluated) ++unique;
    return predicted_label(result.probs);
  }
};

}  // namespace

InferenceResult double_masking_infer(CachedClassifier& cache, ImageId id, const MaskSet& set,
                                     DisagreerPolicy policy) {
  Counted eval{cache, id};
  InferenceResult out;
  out.one_mask_labels.reserve(set.size());
  for (std::size_t m = 0; m < set.size(); ++m) out.one_mask_labels.push_back(eval.label({set[m]}));

  std::map<std::size_t, std::size_t> votes;
  for (std::size_t l : out.one_mask_labels) ++votes[l];
  // std::map iterates in ascending class order, so ties keep the smallest id.
  std::size_t majority = votes.begin()->first;
  for (const auto& [label, count] : votes) {
    if (count > votes[majority]) majority = label;
  }
  out.majority_label = majority;

  auto finish = [&](std::size_t label, InferenceCase c) {
    out.label = label;
    out.inference_case = c;
    out.scheduled_evaluations = eval.scheduled;
    out.unique_evaluations = eval.unique;
    return out;
  };

  if (votes.size() == 1) return finish(majority, InferenceCase::kAgreement);

  std::set<std::size_t> surviving_labels;
  for (std::size_t m1 = 0; m1 < set.size(); ++m1) {
    const std::size_t own = out.one_mask_labels[m1];
    if (own == majority) continue;
    bool unanimous = true;
    for (std::size_t m2 = 0; m2 < set.size(); ++m2) {
      if (eval.label({set[m1], set[m2]}) != own) unanimous = false;
    }
    if (unanimous) {
      ++out.unanimous_disagreers;
      surviving_labels.insert(own);
    }
  }

  const bool single = policy == DisagreerPolicy::kDistinctLabel ? surviving_labels.size() == 1
                                                                 : out.unanimous_disagreers == 1;
  if (single) return finish(*surviving_labels.begin(), InferenceCase::kUnanimousDisagreer);
  return finish(majority, InferenceCase::kMajority);
}

CertificationResult certify(CachedClassifier& cache, ImageId id, std::size_t label,
                            const MaskSet& set, bool full_enumeration) {
  if (label >= cache.class_count()) {
    throw InvalidArgument(fmt::format("label {} out of range for {} classes", label,
                                      cache.class_count()));
  }
  Counted eval{cache, id};
  CertificationResult out;
  out.label = label;
  out.certified = true;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i; j < set.size(); ++j) {
      ++out.combos_evaluated;
      if (eval.label({set[i], set[j]}) != label && out.certified) {
        out.certified = false;
        out.witness = std::make_pair(i, j);
        if (!full_enumeration) {
          out.unique_evaluations = eval.unique;
          return out;
        }
      }
    }
  }
  out.unique_evaluations = eval.unique;
  return out;
}

EvaluationMetrics evaluate(const Classifier& classifier, const LabeledDataset& data,
                           const MaskSet& set, float fill, std::size_t threads,
                           DisagreerPolicy policy) {
  data.validate();
  if (data.size() == 0) throw InvalidArgument("cannot evaluate an empty dataset");
  CachedClassifier cache(classifier, fill);
  for (const ImageTensor& image : data.images) cache.register_image(image);

  EvaluationMetrics metrics;
  metrics.per_image.resize(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    ImageEvaluation& row = metrics.per_image[i];
    row.true_label = data.labels[i];
    row.inference = double_masking_infer(cache, i, set, policy);
    row.certification = certify(cache, i, data.labels[i], set);
    row.unique_evaluations = row.inference.unique_evaluations + row.certification.unique_evaluations;
  });

  std::size_t correct = 0;
  std::size_t certified = 0;
  for (const ImageEvaluation& row : metrics.per_image) {
    if (row.inference.label == row.true_label) ++correct;
    if (row.certification.certified) ++certified;
    ++metrics.case_histogram[static_cast<std::size_t>(row.inference.inference_case) - 1];
  }
  const auto n = static_cast<double>(data.size());
  metrics.clean_accuracy = static_cast<double>(correct) / n;
  metrics.certified_robust_accuracy = static_cast<double>(certified) / n;
  metrics.total_unique_evaluations = cache.unique_evaluations();
  return metrics;
}

}  // namespace pcert
