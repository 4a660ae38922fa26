#include "grove/tree.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "grove/error.h"

namespace grove {

const char* to_string(TreeType type) {
  switch (type) {
    case TreeType::Classification:
      return "Classification";
    case TreeType::Regression:
      return "Regression";
    case TreeType::Survival:
      return "Survival";
    case TreeType::Probability:
      return "Probability estimation";
  }
  return "Unknown";
}

const char* to_string(ImportanceMode mode) {
  switch (mode) {
    case ImportanceMode::None:
      return "none";
    case ImportanceMode::Gini:
      return "impurity";
    case ImportanceMode::PermutationRaw:
      return "permutation";
    case ImportanceMode::PermutationScaled:
      return "permutation (scaled)";
  }
  return "unknown";
}

std::optional<TreeType> tree_type_from_code(int code) {
  switch (code) {
    case 1:
      return TreeType::Classification;
    case 3:
      return TreeType::Regression;
    case 5:
      return TreeType::Survival;
    case 9:
      return TreeType::Probability;
    default:
      return std::nullopt;
  }
}

std::uint32_t default_min_node_size(TreeType type) {
  switch (type) {
    case TreeType::Classification:
      return 1;
    case TreeType::Regression:
      return 5;
    case TreeType::Survival:
      return 3;
    case TreeType::Probability:
      return 10;
  }
  return 1;
}

SplitCriterion criterion_for(TreeType type) {
  switch (type) {
    case TreeType::Regression:
      return SplitCriterion::Variance;
    case TreeType::Survival:
      return SplitCriterion::LogRank;
    case TreeType::Classification:
    case TreeType::Probability:
      return SplitCriterion::Gini;
  }
  return SplitCriterion::Gini;
}

GrowConfig resolve_config(const Dataset& data, GrowConfig config) {
  const auto p = data.num_features();
  if (p == 0) {
    throw UsageError("dataset has no features");
  }
  if (data.num_samples() == 0) {
    throw UsageError("dataset has no samples");
  }
  if (config.num_trees == 0) {
    throw UsageError("number of trees must be positive");
  }
  if (config.mtry == 0) {
    auto root = static_cast<std::uint32_t>(std::sqrt(static_cast<double>(p)));
    while (static_cast<std::size_t>(root + 1) * (root + 1) <= p) ++root;
    while (static_cast<std::size_t>(root) * root > p) --root;
    config.mtry = std::max<std::uint32_t>(1, root);
  }
  if (config.mtry > p) {
    throw UsageError("mtry exceeds feature count (" + std::to_string(config.mtry) + " > " + std::to_string(p) + ")");
  }
  if (config.min_node_size == 0) {
    config.min_node_size = default_min_node_size(config.tree_type);
  }
  if (config.worker_count == 0) {
    config.worker_count = std::max(1u, std::thread::hardware_concurrency());
  }

  const auto kind = data.response_kind();
  bool matches = false;
  switch (config.tree_type) {
    case TreeType::Classification:
    case TreeType::Probability:
      matches = kind == ResponseKind::Classification;
      break;
    case TreeType::Regression:
      matches = kind == ResponseKind::Regression;
      break;
    case TreeType::Survival:
      matches = kind == ResponseKind::Survival;
      break;
  }
  if (!matches) {
    throw UsageError(std::string("tree type ") + to_string(config.tree_type) + " does not match the response");
  }
  return config;
}

std::span<const double> predict_tree(const TreeModel& tree, std::span<const double> row) {
  const auto leaf = tree.find_leaf([&](std::uint32_t feature) {
    if (feature >= row.size()) {
      throw DataError("sample is missing feature " + std::to_string(feature));
    }
    return row[feature];
  });
  return tree.payload(leaf);
}

std::vector<double> terminal_survival_curve(std::span<const double> time, std::span<const std::uint8_t> status,
                                            std::span<const double> timepoints,
                                            std::span<const std::uint32_t> counts) {
  if (time.size() != status.size() || (!counts.empty() && counts.size() != time.size())) {
    throw std::invalid_argument("survival member arrays differ in length");
  }
  auto weight = [&](std::size_t i) -> double { return counts.empty() ? 1.0 : counts[i]; };
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return time[a] < time[b]; });

  double at_risk = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    at_risk += weight(i);
  }
  std::vector<double> curve(timepoints.size(), 1.0);
  double survival = 1.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double u = time[order[i]];
    while (k < timepoints.size() && timepoints[k] < u) {
      curve[k++] = survival;
    }
    double deaths = 0.0;
    double leaving = 0.0;
    std::size_t j = i;
    for (; j < order.size() && time[order[j]] == u; ++j) {
      leaving += weight(order[j]);
      if (status[order[j]] == 1) {
        deaths += weight(order[j]);
      }
    }
    if (deaths > 0 && at_risk > 0) {
      survival *= 1.0 - deaths / at_risk;
    }
    at_risk -= leaving;
    i = j;
  }
  for (; k < timepoints.size(); ++k) {
    curve[k] = survival;
  }
  return curve;
}

GrowContext::GrowContext(const Dataset& data, const GrowConfig& config) : data_(data), config_(config) {
  switch (config_.tree_type) {
    case TreeType::Classification:
    case TreeType::Probability: {
      const auto& response = data.classification();
      num_classes_ = response.classes.size();
      target_ = SplitTarget::gini(response.labels, num_classes_);
      break;
    }
    case TreeType::Regression:
      target_ = SplitTarget::variance(data.regression().values);
      break;
    case TreeType::Survival: {
      const auto& response = data.survival();
      timepoints_ = event_timepoints(response);
      target_ = SplitTarget::logrank(response.time, response.status, timepoints_);
      break;
    }
  }
  if (config_.memory_mode == MemoryMode::RuntimeOptimized) {
    owned_sorted_index_.resize(data.num_features());
    for (std::size_t j = 0; j < data.num_features(); ++j) {
      const auto& column = data.feature(j);
      if (!column.is_packed() && !data.has_sorted_index(j)) {
        owned_sorted_index_[j] = sorted_permutation(column.dense());
      }
    }
  }
}

std::span<const std::uint32_t> GrowContext::sorted_index(std::size_t feature) const {
  if (data_.has_sorted_index(feature)) {
    return data_.sorted_index(feature);
  }
  if (feature < owned_sorted_index_.size()) {
    return owned_sorted_index_[feature];
  }
  return {};
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const GrowContext& context, Rng& rng)
      : context_(context),
        data_(context.data()),
        config_(context.config()),
        rng_(rng),
        searcher_(context.data(), context.target()) {}

  GrownTree grow(const BagRecord& bag) {
    if (bag.inbag_counts.size() != data_.num_samples()) {
      throw std::invalid_argument("bag record does not match the dataset");
    }
    samples_.clear();
    inbag_size_ = 0;
    for (std::size_t i = 0; i < bag.inbag_counts.size(); ++i) {
      if (const auto c = bag.inbag_counts[i]) {
        samples_.push_back({static_cast<std::uint32_t>(i), c});
        inbag_size_ += c;
      }
    }
    if (samples_.empty()) {
      throw std::invalid_argument("bag has no in-bag samples");
    }
    scratch_.resize(samples_.size());

    result_ = GrownTree{};
    auto& tree = result_.tree;
    switch (config_.tree_type) {
      case TreeType::Classification:
      case TreeType::Regression:
        tree.payload_width = 1;
        break;
      case TreeType::Probability:
        tree.payload_width = static_cast<std::uint32_t>(context_.num_classes());
        break;
      case TreeType::Survival:
        tree.payload_width = static_cast<std::uint32_t>(context_.timepoints().size());
        break;
    }
    if (config_.importance_mode == ImportanceMode::Gini) {
      result_.split_importance.assign(data_.num_features(), 0.0);
    }

    add_node();
    struct Pending {
      std::uint32_t node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack{{0, 0, samples_.size()}};
    while (!stack.empty()) {
      const auto [node, begin, end] = stack.back();
      stack.pop_back();
      const std::span<const NodeSample> members(samples_.data() + begin, end - begin);
      searcher_.set_node(members);
      const auto size = searcher_.node_size();

      SplitResult best;
      if (size > config_.min_node_size && !searcher_.node_is_pure()) {
        best = find_best_split(size);
      }
      if (!best.present) {
        make_leaf(node, members, size);
        continue;
      }

      const auto mid = begin + partition(begin, end, best);
      const auto left = static_cast<std::uint32_t>(tree.num_nodes());
      add_node();
      add_node();
      tree.split_feature[node] = best.feature;
      tree.split_threshold[node] = best.threshold;
      tree.left_child[node] = left;
      tree.right_child[node] = left + 1;
      if (!result_.split_importance.empty()) {
        result_.split_importance[best.feature] +=
            static_cast<double>(size) / static_cast<double>(inbag_size_) * best.gain;
      }
      stack.push_back({left + 1, mid, end});
      stack.push_back({left, begin, mid});
    }
    return std::move(result_);
  }

 private:
  SplitResult find_best_split(std::uint64_t size) {
    SplitResult best;
    const auto candidates = sample_without_replacement(data_.num_features(), config_.mtry, rng_);
    for (const auto feature : candidates) {
      const bool packed = data_.feature(feature).is_packed();
      SplitResult result;
      switch (select_split_strategy(size, config_.memory_mode, packed, config_.presort_threshold)) {
        case SplitStrategy::Presorted:
          result = searcher_.presorted(feature, context_.sorted_index(feature));
          break;
        case SplitStrategy::SortOnDemand:
          result = searcher_.sort_on_demand(feature);
          break;
        case SplitStrategy::FixedLevels:
          result = searcher_.fixed_levels(feature);
          break;
      }
      if (result.present && result.gain > best.gain) {
        best = result;
      }
    }
    return best;
  }

  // Stable partition of samples_[begin, end); returns the left count.
  std::size_t partition(std::size_t begin, std::size_t end, const SplitResult& split) {
    const auto& column = data_.feature(split.feature);
    std::size_t left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (column.value(samples_[i].row) <= split.threshold) {
        scratch_[left++] = samples_[i];
      }
    }
    std::size_t r = left;
    for (std::size_t i = begin; i < end; ++i) {
      if (!(column.value(samples_[i].row) <= split.threshold)) {
        scratch_[r++] = samples_[i];
      }
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(end - begin),
              samples_.begin() + static_cast<std::ptrdiff_t>(begin));
    return left;
  }

  void add_node() {
    auto& tree = result_.tree;
    tree.split_feature.push_back(0);
    tree.split_threshold.push_back(0.0);
    tree.left_child.push_back(0);
    tree.right_child.push_back(0);
    tree.leaf_index.push_back(0);
  }

  void make_leaf(std::uint32_t node, std::span<const NodeSample> members, std::uint64_t size) {
    auto& tree = result_.tree;
    tree.leaf_index[node] = static_cast<std::uint32_t>(tree.num_leaves());
    const auto n = static_cast<double>(size);
    switch (config_.tree_type) {
      case TreeType::Classification: {
        const auto counts = class_counts(members);
        const auto winner = std::max_element(counts.begin(), counts.end()) - counts.begin();
        tree.leaf_values.push_back(static_cast<double>(winner));
        break;
      }
      case TreeType::Probability: {
        for (auto c : class_counts(members)) {
          tree.leaf_values.push_back(static_cast<double>(c) / n);
        }
        break;
      }
      case TreeType::Regression: {
        const auto& values = context_.target().values;
        double sum = 0.0;
        for (const auto& s : members) {
          sum += s.count * values[s.row];
        }
        tree.leaf_values.push_back(sum / n);
        break;
      }
      case TreeType::Survival: {
        const auto& response = data_.survival();
        std::vector<double> time;
        std::vector<std::uint8_t> status;
        std::vector<std::uint32_t> counts;
        for (const auto& s : members) {
          time.push_back(response.time[s.row]);
          status.push_back(response.status[s.row]);
          counts.push_back(s.count);
        }
        const auto curve = terminal_survival_curve(time, status, context_.timepoints(), counts);
        tree.leaf_values.insert(tree.leaf_values.end(), curve.begin(), curve.end());
        break;
      }
    }
  }

  std::vector<std::uint64_t> class_counts(std::span<const NodeSample> members) const {
    std::vector<std::uint64_t> counts(context_.num_classes(), 0);
    const auto& labels = context_.target().labels;
    for (const auto& s : members) {
      counts[labels[s.row]] += s.count;
    }
    return counts;
  }

  const GrowContext& context_;
  const Dataset& data_;
  const GrowConfig& config_;
  Rng& rng_;
  SplitSearcher searcher_;
  std::vector<NodeSample> samples_;
  std::vector<NodeSample> scratch_;
  std::uint64_t inbag_size_ = 0;
  GrownTree result_;
};

}  // namespace

GrownTree grow_tree(const GrowContext& context, const BagRecord& bag, Rng& rng) {
  TreeGrower grower(context, rng);
  return grower.grow(bag);
}

TreeModel grow_tree(const Dataset& data, const GrowConfig& config, const BagRecord& bag, Rng& rng) {
  const auto resolved = resolve_config(data, config);
  const GrowContext context(data, resolved);
  return grow_tree(context, bag, rng).tree;
}

}  // namespace grove
