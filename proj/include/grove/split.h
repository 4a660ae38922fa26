#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "grove/data.h"

namespace grove {

enum class SplitCriterion { Gini, Variance, LogRank };

enum class SplitStrategy { Presorted, SortOnDemand, FixedLevels };

const char* to_string(SplitStrategy strategy);

// Nodes above this size use the presorted search in runtime-optimized mode.
inline constexpr std::uint64_t kDefaultPresortThreshold = 100;

// Samples with value <= threshold go left.
struct SplitResult {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
  bool present = false;
};

// One distinct in-bag row of a node with its bootstrap multiplicity.
// Node sample lists are kept in ascending row order.
struct NodeSample {
  std::uint32_t row;
  std::uint32_t count;
};

// Per-sample response data in the form the split search consumes.
struct SplitTarget {
  SplitCriterion criterion = SplitCriterion::Gini;
  std::size_t num_classes = 0;
  std::vector<std::uint32_t> labels;
  std::vector<double> values;
  // Number of forest timepoints <= the sample's time.
  std::vector<std::uint32_t> time_rank;
  std::vector<std::uint8_t> status;
  std::size_t num_timepoints = 0;

  static SplitTarget gini(std::vector<std::uint32_t> labels, std::size_t num_classes);
  static SplitTarget variance(std::vector<double> values);
  static SplitTarget logrank(std::span<const double> time, std::vector<std::uint8_t> status,
                             std::span<const double> timepoints);

  std::size_t num_samples() const;
};

// Ascending distinct times of observed events.
std::vector<double> event_timepoints(const SurvivalResponse& survival);

double gini_impurity(std::span<const std::uint64_t> class_counts);

double gini_decrease(std::span<const std::uint64_t> parent, std::span<const std::uint64_t> left,
                     std::span<const std::uint64_t> right);

// Population-variance decrease Var(P) - (nL/n) Var(L) - (nR/n) Var(R).
double variance_decrease(std::span<const double> parent, std::span<const double> left,
                         std::span<const double> right);

// |standardized log-rank statistic| between two groups; nullopt when the
// variance is zero (no informative event time).
std::optional<double> logrank_statistic(std::span<const double> left_time,
                                        std::span<const std::uint8_t> left_status,
                                        std::span<const double> right_time,
                                        std::span<const std::uint8_t> right_status);

SplitStrategy select_split_strategy(std::uint64_t node_size, MemoryMode mode, bool packed_feature,
                                    std::uint64_t presort_threshold = kDefaultPresortThreshold);

// Best split of one node over single features. All three search algorithms
// visit candidate thresholds in ascending order and accumulate statistics in
// the same (value, row) order, so their results are bit-identical.
// One instance per worker; not thread-safe.
class SplitSearcher {
 public:
  SplitSearcher(const Dataset& data, const SplitTarget& target);
  ~SplitSearcher();
  SplitSearcher(SplitSearcher&&) noexcept;
  SplitSearcher& operator=(SplitSearcher&&) = delete;

  // The span must stay alive until the next set_node call.
  void set_node(std::span<const NodeSample> samples);

  // Sum of multiplicities of the current node.
  std::uint64_t node_size() const;
  // True when no split can have positive gain (single class, constant
  // response, or no events).
  bool node_is_pure() const;

  SplitResult presorted(std::size_t feature, std::span<const std::uint32_t> sorted_index);
  SplitResult sort_on_demand(std::size_t feature);
  SplitResult fixed_levels(std::size_t feature);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SplitResult best_split_presorted(const Dataset& data, const SplitTarget& target,
                                 std::span<const NodeSample> node, std::size_t feature,
                                 std::span<const std::uint32_t> sorted_index);
SplitResult best_split_sort_on_demand(const Dataset& data, const SplitTarget& target,
                                      std::span<const NodeSample> node, std::size_t feature);
SplitResult best_split_fixed_levels(const Dataset& data, const SplitTarget& target,
                                    std::span<const NodeSample> node, std::size_t feature);

}  // namespace grove
