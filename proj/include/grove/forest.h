#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grove/data.h"
#include "grove/random.h"
#include "grove/tree.h"

namespace grove {

struct ForestModel {
  // Resolved configuration the forest was grown with.
  GrowConfig config;
  std::uint64_t num_samples = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> classes;  // classification and probability
  std::vector<double> timepoints;    // survival
  std::vector<TreeModel> trees;
  // Empty for forests loaded from a file.
  std::vector<BagRecord> bag_records;
  // Per feature, summed over trees; filled when grown with Gini importance.
  std::vector<double> split_importance_sum;

  TreeType tree_type() const { return config.tree_type; }
  std::size_t num_trees() const { return trees.size(); }
  // Width of one prediction row.
  std::size_t prediction_width() const;
};

// Tree t draws its bootstrap and all split candidates from
// Rng(derive_seed(config.seed, t)), so the forest does not depend on the
// number of workers.
ForestModel grow_forest(const Dataset& data, const GrowConfig& config);

struct Predictions {
  TreeType tree_type = TreeType::Classification;
  std::size_t num_rows = 0;
  // 1 for classification (class index) and regression; number of classes for
  // probability; number of timepoints for survival.
  std::size_t width = 1;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * width, width);
  }
};

// Combines leaf payloads of several trees into one prediction row.
class PayloadAggregator {
 public:
  PayloadAggregator(TreeType type, std::size_t payload_width, std::size_t num_classes);

  void reset();
  void add(std::span<const double> payload);
  std::size_t count() const { return count_; }
  // Writes the aggregated row (width() values). Requires count() > 0.
  void finish(std::span<double> out) const;
  std::size_t width() const;

 private:
  TreeType type_;
  std::size_t payload_width_;
  std::size_t num_classes_;
  std::vector<double> sums_;
  std::size_t count_ = 0;
};

// Column of `data` holding each forest feature. Throws DataError listing the
// missing feature names.
std::vector<std::size_t> feature_mapping(const ForestModel& forest, const Dataset& data);

// Majority vote (ties to the lowest class index), mean, mean class
// frequencies, or pointwise mean survival curve.
Predictions predict_forest(const ForestModel& forest, const Dataset& data, std::uint32_t worker_count = 0);

// Risk score of a survival curve: sum over timepoints of 1 - S(t).
double survival_risk(std::span<const double> curve);

}  // namespace grove
