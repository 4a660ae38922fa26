#include "grove/forest.h"

#include <algorithm>
#include <stdexcept>

#include "grove/error.h"
#include "parallel.h"

namespace grove {

std::size_t ForestModel::prediction_width() const {
  switch (config.tree_type) {
    case TreeType::Classification:
    case TreeType::Regression:
      return 1;
    case TreeType::Probability:
      return classes.size();
    case TreeType::Survival:
      return timepoints.size();
  }
  return 1;
}

ForestModel grow_forest(const Dataset& data, const GrowConfig& config) {
  ForestModel forest;
  forest.config = resolve_config(data, config);
  forest.num_samples = data.num_samples();
  forest.feature_names = data.feature_names();
  if (const auto* response = std::get_if<ClassificationResponse>(&data.response())) {
    forest.classes = response->classes;
  }

  const GrowContext context(data, forest.config);
  forest.timepoints.assign(context.timepoints().begin(), context.timepoints().end());

  const auto num_trees = forest.config.num_trees;
  forest.trees.resize(num_trees);
  forest.bag_records.resize(num_trees);
  std::vector<std::vector<double>> importance(num_trees);

  detail::parallel_for(num_trees, forest.config.worker_count, [&](std::size_t t, std::size_t) {
    Rng rng(derive_seed(forest.config.seed, t));
    auto bag = bootstrap(data.num_samples(), rng);
    auto grown = grow_tree(context, bag, rng);
    forest.trees[t] = std::move(grown.tree);
    forest.bag_records[t] = std::move(bag);
    importance[t] = std::move(grown.split_importance);
  });

  if (forest.config.importance_mode == ImportanceMode::Gini) {
    forest.split_importance_sum.assign(data.num_features(), 0.0);
    for (const auto& per_tree : importance) {
      for (std::size_t j = 0; j < per_tree.size(); ++j) {
        forest.split_importance_sum[j] += per_tree[j];
      }
    }
  }
  return forest;
}

PayloadAggregator::PayloadAggregator(TreeType type, std::size_t payload_width, std::size_t num_classes)
    : type_(type), payload_width_(payload_width), num_classes_(num_classes) {
  reset();
}

void PayloadAggregator::reset() {
  sums_.assign(type_ == TreeType::Classification ? num_classes_ : payload_width_, 0.0);
  count_ = 0;
}

void PayloadAggregator::add(std::span<const double> payload) {
  if (type_ == TreeType::Classification) {
    sums_[static_cast<std::size_t>(payload[0])] += 1.0;
  } else {
    for (std::size_t k = 0; k < payload_width_; ++k) {
      sums_[k] += payload[k];
    }
  }
  ++count_;
}

std::size_t PayloadAggregator::width() const {
  return type_ == TreeType::Classification ? 1 : payload_width_;
}

void PayloadAggregator::finish(std::span<double> out) const {
  if (type_ == TreeType::Classification) {
    out[0] = static_cast<double>(std::max_element(sums_.begin(), sums_.end()) - sums_.begin());
    return;
  }
  const auto n = static_cast<double>(count_);
  for (std::size_t k = 0; k < payload_width_; ++k) {
    out[k] = sums_[k] / n;
  }
}

std::vector<std::size_t> feature_mapping(const ForestModel& forest, const Dataset& data) {
  std::vector<std::size_t> mapping;
  std::string missing;
  for (const auto& name : forest.feature_names) {
    if (const auto j = data.feature_index(name)) {
      mapping.push_back(*j);
    } else {
      missing += missing.empty() ? name : ", " + name;
    }
  }
  if (!missing.empty()) {
    throw DataError("prediction data is missing features: " + missing);
  }
  return mapping;
}

Predictions predict_forest(const ForestModel& forest, const Dataset& data, std::uint32_t worker_count) {
  if (forest.trees.empty()) {
    throw std::invalid_argument("forest has no trees");
  }
  const auto mapping = feature_mapping(forest, data);
  const auto payload_width = forest.trees.front().payload_width;

  Predictions predictions;
  predictions.tree_type = forest.tree_type();
  predictions.num_rows = data.num_samples();
  predictions.width = forest.prediction_width();
  predictions.values.assign(predictions.num_rows * predictions.width, 0.0);

  constexpr std::size_t kChunk = 256;
  const auto chunks = (predictions.num_rows + kChunk - 1) / kChunk;
  detail::parallel_for(chunks, detail::resolve_workers(worker_count), [&](std::size_t chunk, std::size_t) {
    PayloadAggregator aggregator(forest.tree_type(), payload_width, forest.classes.size());
    const auto end = std::min(predictions.num_rows, (chunk + 1) * kChunk);
    for (std::size_t row = chunk * kChunk; row < end; ++row) {
      aggregator.reset();
      for (const auto& tree : forest.trees) {
        const auto leaf = tree.find_leaf([&](std::uint32_t f) { return data.value(row, mapping[f]); });
        aggregator.add(tree.payload(leaf));
      }
      aggregator.finish(std::span<double>(predictions.values).subspan(row * predictions.width, predictions.width));
    }
  });
  return predictions;
}

double survival_risk(std::span<const double> curve) {
  double risk = 0.0;
  for (double s : curve) {
    risk += 1.0 - s;
  }
  return risk;
}

}  // namespace grove
