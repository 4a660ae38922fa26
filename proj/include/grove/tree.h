#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grove/data.h"
#include "grove/random.h"
#include "grove/split.h"

namespace grove {

// Numeric codes match the --treetype flag.
enum class TreeType : std::uint8_t { Classification = 1, Regression = 3, Survival = 5, Probability = 9 };

enum class ImportanceMode : std::uint8_t { None = 0, Gini = 1, PermutationRaw = 2, PermutationScaled = 3 };

const char* to_string(TreeType type);
const char* to_string(ImportanceMode mode);
std::optional<TreeType> tree_type_from_code(int code);

struct GrowConfig {
  TreeType tree_type = TreeType::Classification;
  std::uint32_t num_trees = 500;
  // 0 selects floor(sqrt(p)).
  std::uint32_t mtry = 0;
  // 0 selects the per-type default (see default_min_node_size).
  std::uint32_t min_node_size = 0;
  MemoryMode memory_mode = MemoryMode::RuntimeOptimized;
  ImportanceMode importance_mode = ImportanceMode::None;
  std::uint64_t seed = 0;
  // 0 selects std::thread::hardware_concurrency().
  std::uint32_t worker_count = 0;
  std::uint64_t presort_threshold = kDefaultPresortThreshold;
};

std::uint32_t default_min_node_size(TreeType type);

// Fills defaults and checks the configuration against the dataset.
// Throws UsageError.
GrowConfig resolve_config(const Dataset& data, GrowConfig config);

SplitCriterion criterion_for(TreeType type);

// Flat-array tree. Node 0 is the root; children always have larger indices
// than their parent; terminal nodes have left_child == 0.
struct TreeModel {
  std::vector<std::uint32_t> split_feature;
  std::vector<double> split_threshold;
  std::vector<std::uint32_t> left_child;
  std::vector<std::uint32_t> right_child;
  std::vector<std::uint32_t> leaf_index;
  // Classification: 1 (class index). Regression: 1 (mean).
  // Probability: num_classes. Survival: num_timepoints.
  std::uint32_t payload_width = 1;
  std::vector<double> leaf_values;

  std::size_t num_nodes() const { return left_child.size(); }
  std::size_t num_leaves() const { return payload_width == 0 ? 0 : leaf_values.size() / payload_width; }
  bool is_terminal(std::size_t node) const { return left_child[node] == 0; }

  std::span<const double> payload(std::size_t node) const {
    return std::span<const double>(leaf_values).subspan(std::size_t{leaf_index[node]} * payload_width,
                                                         payload_width);
  }

  // value(feature) returns the sample's value of a forest feature.
  template <typename ValueOf>
  std::size_t find_leaf(ValueOf&& value) const {
    std::size_t node = 0;
    while (left_child[node] != 0) {
      node = value(split_feature[node]) <= split_threshold[node] ? left_child[node] : right_child[node];
    }
    return node;
  }

  bool operator==(const TreeModel&) const = default;
};

// Leaf payload for a row given as values of all forest features.
std::span<const double> predict_tree(const TreeModel& tree, std::span<const double> row);

// Kaplan-Meier estimate evaluated at each timepoint. counts, when given,
// are case multiplicities.
std::vector<double> terminal_survival_curve(std::span<const double> time, std::span<const std::uint8_t> status,
                                            std::span<const double> timepoints,
                                            std::span<const std::uint32_t> counts = {});

// Read-only state shared by all trees of one forest run.
class GrowContext {
 public:
  // config must already be resolved.
  GrowContext(const Dataset& data, const GrowConfig& config);

  const Dataset& data() const { return data_; }
  const GrowConfig& config() const { return config_; }
  const SplitTarget& target() const { return target_; }
  std::span<const double> timepoints() const { return timepoints_; }
  std::size_t num_classes() const { return num_classes_; }
  std::span<const std::uint32_t> sorted_index(std::size_t feature) const;

 private:
  const Dataset& data_;
  GrowConfig config_;
  SplitTarget target_;
  std::vector<double> timepoints_;
  std::size_t num_classes_ = 0;
  // Built here when the dataset has no cached index; freed with the context.
  std::vector<std::vector<std::uint32_t>> owned_sorted_index_;
};

struct GrownTree {
  TreeModel tree;
  // Per feature: sum over splits of (node size / in-bag size) * gain.
  std::vector<double> split_importance;
};

GrownTree grow_tree(const GrowContext& context, const BagRecord& bag, Rng& rng);

TreeModel grow_tree(const Dataset& data, const GrowConfig& config, const BagRecord& bag, Rng& rng);

}  // namespace grove
