#pragma once

#include <cstdint>

#include "grove/data.h"

namespace grove::reference {

// Straightforward random forest used as an independent check of the engine:
// bootstrap rows are kept as an expanded index list, every node re-sorts its
// candidate features, impurity is recomputed from class counts, and the
// recursion has no shortcuts. Classification and regression only.
struct NaiveForestConfig {
  std::uint32_t num_trees = 500;
  std::uint32_t mtry = 1;
  std::uint32_t min_node_size = 1;
  std::uint64_t seed = 1;
};

// OOB misclassification rate (classification response) or OOB MSE
// (regression response).
double naive_oob_error(const Dataset& data, const NaiveForestConfig& config);

}  // namespace grove::reference
