#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grove/data.h"
#include "grove/forest.h"

namespace grove {

struct OobSummary {
  // Rows of samples without any OOB tree are zero-filled; see oob_tree_counts.
  Predictions predictions;
  std::vector<std::uint32_t> oob_tree_counts;
  std::size_t num_evaluated = 0;
  // Misclassification frequency, mean squared error, Brier score
  // (probability) or 1 - C index (survival).
  double error = 0.0;

  bool has_prediction(std::size_t sample) const { return oob_tree_counts[sample] > 0; }
};

// Throws NoOobDataError when no sample is out-of-bag in any tree.
OobSummary oob_error(const ForestModel& forest, const Dataset& data);

// Harrell's C. A pair is comparable when the shorter time is an event, or the
// times tie and only one of the two is an event (the event counts as
// earlier). Higher risk for the earlier failure is concordant; tied risks
// count one half. Throws std::invalid_argument without comparable pairs.
double c_index(std::span<const double> time, std::span<const std::uint8_t> status,
               std::span<const double> risk);

struct ImportanceReport {
  ImportanceMode mode = ImportanceMode::None;
  std::vector<std::string> feature_names;
  std::vector<double> values;
  // PermutationScaled only: per-feature standard error of the tree deltas.
  std::vector<double> standard_errors;
};

// Impurity importance: per-tree sums of (node size / in-bag size) * gain,
// averaged over trees.
ImportanceReport gini_importance(const ForestModel& forest);

// Per tree t with at least two OOB samples, v[t][j] is the tree's OOB accuracy
// measure minus the measure after shuffling feature j among those samples.
// Raw importance is the mean over trees; scaled divides it by sd / sqrt(T).
ImportanceReport permutation_importance(const ForestModel& forest, const Dataset& data, bool scaled,
                                        std::uint64_t seed, std::uint32_t worker_count = 0);

// Dispatches on forest.config.importance_mode; the permutation stream is
// derived from the forest seed.
ImportanceReport compute_importance(const ForestModel& forest, const Dataset& data);

// Rows are true classes, columns predicted classes.
std::vector<std::vector<std::uint64_t>> confusion_matrix(std::span<const std::uint32_t> truth,
                                                         std::span<const std::uint32_t> predicted,
                                                         std::size_t num_classes);

std::vector<std::vector<std::uint64_t>> confusion_matrix(std::span<const std::string> truth,
                                                         std::span<const std::string> predicted,
                                                         std::span<const std::string> classes);

}  // namespace grove
