#include "grove/evaluation.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "grove/error.h"
#include "parallel.h"

namespace grove {

namespace {

double brier(std::span<const double> probabilities, std::uint32_t label) {
  double sum = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    const double target = k == label ? 1.0 : 0.0;
    sum += (probabilities[k] - target) * (probabilities[k] - target);
  }
  return sum;
}

// Scores predictions of a subset of training rows; nullopt when the measure
// is undefined (no comparable survival pairs).
class Scorer {
 public:
  explicit Scorer(const Dataset& data) : data_(data) {}

  // Lower is better for every tree type.
  std::optional<double> loss(TreeType type, std::span<const std::uint32_t> rows,
                             const std::vector<double>& values, std::size_t width) const {
    if (rows.empty()) {
      return std::nullopt;
    }
    const auto n = static_cast<double>(rows.size());
    switch (type) {
      case TreeType::Classification: {
        const auto& labels = data_.classification().labels;
        double wrong = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          wrong += values[i] != static_cast<double>(labels[rows[i]]);
        }
        return wrong / n;
      }
      case TreeType::Probability: {
        const auto& labels = data_.classification().labels;
        double sum = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          sum += brier(std::span<const double>(values).subspan(i * width, width), labels[rows[i]]);
        }
        return sum / n;
      }
      case TreeType::Regression: {
        const auto& y = data_.regression().values;
        double sum = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          sum += (values[i] - y[rows[i]]) * (values[i] - y[rows[i]]);
        }
        return sum / n;
      }
      case TreeType::Survival: {
        const auto& response = data_.survival();
        std::vector<double> time;
        std::vector<std::uint8_t> status;
        std::vector<double> risk;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          time.push_back(response.time[rows[i]]);
          status.push_back(response.status[rows[i]]);
          risk.push_back(survival_risk(std::span<const double>(values).subspan(i * width, width)));
        }
        try {
          return 1.0 - c_index(time, status, risk);
        } catch (const std::invalid_argument&) {
          return std::nullopt;
        }
      }
    }
    return std::nullopt;
  }

 private:
  const Dataset& data_;
};

}  // namespace

OobSummary oob_error(const ForestModel& forest, const Dataset& data) {
  if (forest.bag_records.size() != forest.trees.size() || forest.trees.empty()) {
    throw std::invalid_argument("forest has no bag records");
  }
  const auto n = data.num_samples();
  if (forest.bag_records.front().inbag_counts.size() != n) {
    throw std::invalid_argument("bag records do not match the dataset");
  }
  const auto mapping = feature_mapping(forest, data);
  const auto payload_width = forest.trees.front().payload_width;

  OobSummary summary;
  summary.predictions.tree_type = forest.tree_type();
  summary.predictions.num_rows = n;
  summary.predictions.width = forest.prediction_width();
  summary.predictions.values.assign(n * summary.predictions.width, 0.0);
  summary.oob_tree_counts.assign(n, 0);

  PayloadAggregator aggregator(forest.tree_type(), payload_width, forest.classes.size());
  std::vector<std::uint32_t> evaluated;
  std::vector<double> evaluated_values;
  const auto width = summary.predictions.width;
  for (std::size_t row = 0; row < n; ++row) {
    aggregator.reset();
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      if (forest.bag_records[t].inbag_counts[row] != 0) {
        continue;
      }
      const auto& tree = forest.trees[t];
      const auto leaf = tree.find_leaf([&](std::uint32_t f) { return data.value(row, mapping[f]); });
      aggregator.add(tree.payload(leaf));
    }
    summary.oob_tree_counts[row] = static_cast<std::uint32_t>(aggregator.count());
    if (aggregator.count() == 0) {
      continue;
    }
    const auto out = std::span<double>(summary.predictions.values).subspan(row * width, width);
    aggregator.finish(out);
    evaluated.push_back(static_cast<std::uint32_t>(row));
    evaluated_values.insert(evaluated_values.end(), out.begin(), out.end());
  }
  if (evaluated.empty()) {
    throw NoOobDataError("no OOB data: every sample is in-bag in every tree");
  }
  summary.num_evaluated = evaluated.size();
  const auto loss = Scorer(data).loss(forest.tree_type(), evaluated, evaluated_values, width);
  if (!loss) {
    throw NoOobDataError("no comparable OOB pairs for the C index");
  }
  summary.error = *loss;
  return summary;
}

double c_index(std::span<const double> time, std::span<const std::uint8_t> status,
               std::span<const double> risk) {
  if (time.size() != status.size() || time.size() != risk.size()) {
    throw std::invalid_argument("c_index inputs differ in length");
  }
  double concordant = 0.0;
  double comparable = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (status[i] != 1) {
      continue;
    }
    for (std::size_t j = 0; j < time.size(); ++j) {
      const bool later = time[j] > time[i] || (time[j] == time[i] && status[j] == 0);
      if (j == i || !later) {
        continue;
      }
      comparable += 1.0;
      if (risk[i] > risk[j]) {
        concordant += 1.0;
      } else if (risk[i] == risk[j]) {
        concordant += 0.5;
      }
    }
  }
  if (comparable == 0.0) {
    throw std::invalid_argument("no comparable pairs");
  }
  return concordant / comparable;
}

ImportanceReport gini_importance(const ForestModel& forest) {
  if (forest.config.importance_mode != ImportanceMode::Gini ||
      forest.split_importance_sum.size() != forest.feature_names.size()) {
    throw UsageError("forest was not grown with impurity importance");
  }
  ImportanceReport report;
  report.mode = ImportanceMode::Gini;
  report.feature_names = forest.feature_names;
  const auto trees = static_cast<double>(forest.num_trees());
  for (double sum : forest.split_importance_sum) {
    report.values.push_back(sum / trees);
  }
  return report;
}

ImportanceReport permutation_importance(const ForestModel& forest, const Dataset& data, bool scaled,
                                        std::uint64_t seed, std::uint32_t worker_count) {
  if (forest.bag_records.size() != forest.trees.size() || forest.trees.empty()) {
    throw std::invalid_argument("forest has no bag records");
  }
  const auto mapping = feature_mapping(forest, data);
  const auto p = forest.feature_names.size();
  const auto num_trees = forest.trees.size();
  const auto type = forest.tree_type();
  const auto width = forest.prediction_width();
  const Scorer scorer(data);

  // deltas[t] is empty when tree t contributes nothing.
  std::vector<std::vector<double>> deltas(num_trees);
  std::vector<std::vector<bool>> defined(num_trees);
  const auto permutation_seed = seed ^ kPermutationSalt;

  detail::parallel_for(num_trees, detail::resolve_workers(worker_count), [&](std::size_t t, std::size_t) {
    const auto& tree = forest.trees[t];
    const auto& oob = forest.bag_records[t].oob_indices;
    if (oob.size() < 2) {
      return;
    }
    std::vector<double> values(oob.size() * width);
    auto predict_into = [&](auto&& value_of) {
      for (std::size_t i = 0; i < oob.size(); ++i) {
        const auto leaf = tree.find_leaf([&](std::uint32_t f) { return value_of(i, f); });
        const auto payload = tree.payload(leaf);
        std::copy(payload.begin(), payload.end(), values.begin() + static_cast<std::ptrdiff_t>(i * width));
      }
    };
    predict_into([&](std::size_t i, std::uint32_t f) { return data.value(oob[i], mapping[f]); });
    const auto baseline = scorer.loss(type, oob, values, width);
    if (!baseline) {
      return;
    }
    deltas[t].assign(p, 0.0);
    defined[t].assign(p, false);
    for (std::size_t j = 0; j < p; ++j) {
      Rng rng(derive_seed(derive_seed(permutation_seed, t), j));
      const auto shuffled = permuted(std::vector<std::uint32_t>(oob.begin(), oob.end()), rng);
      predict_into([&](std::size_t i, std::uint32_t f) {
        return f == j ? data.value(shuffled[i], mapping[f]) : data.value(oob[i], mapping[f]);
      });
      if (const auto permuted_loss = scorer.loss(type, oob, values, width)) {
        deltas[t][j] = *permuted_loss - *baseline;
        defined[t][j] = true;
      }
    }
  });

  ImportanceReport report;
  report.mode = scaled ? ImportanceMode::PermutationScaled : ImportanceMode::PermutationRaw;
  report.feature_names = forest.feature_names;
  report.values.assign(p, 0.0);
  if (scaled) {
    report.standard_errors.assign(p, 0.0);
  }
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < num_trees; ++t) {
      if (!deltas[t].empty() && defined[t][j]) {
        sum += deltas[t][j];
        ++count;
      }
    }
    if (count == 0) {
      continue;
    }
    const double mean = sum / static_cast<double>(count);
    report.values[j] = mean;
    if (!scaled) {
      continue;
    }
    double ss = 0.0;
    for (std::size_t t = 0; t < num_trees; ++t) {
      if (!deltas[t].empty() && defined[t][j]) {
        ss += (deltas[t][j] - mean) * (deltas[t][j] - mean);
      }
    }
    const double sd = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
    const double se = sd / std::sqrt(static_cast<double>(count));
    report.standard_errors[j] = se;
    // A zero standard error leaves nothing to scale by; report 0.
    report.values[j] = se > 0 ? mean / se : 0.0;
  }
  return report;
}

ImportanceReport compute_importance(const ForestModel& forest, const Dataset& data) {
  switch (forest.config.importance_mode) {
    case ImportanceMode::None:
      return ImportanceReport{};
    case ImportanceMode::Gini:
      return gini_importance(forest);
    case ImportanceMode::PermutationRaw:
      return permutation_importance(forest, data, false, forest.config.seed, forest.config.worker_count);
    case ImportanceMode::PermutationScaled:
      return permutation_importance(forest, data, true, forest.config.seed, forest.config.worker_count);
  }
  return ImportanceReport{};
}

std::vector<std::vector<std::uint64_t>> confusion_matrix(std::span<const std::uint32_t> truth,
                                                         std::span<const std::uint32_t> predicted,
                                                         std::size_t num_classes) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("truth and predictions differ in length");
  }
  std::vector<std::vector<std::uint64_t>> matrix(num_classes, std::vector<std::uint64_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw DataError("label outside the class set at position " + std::to_string(i));
    }
    ++matrix[truth[i]][predicted[i]];
  }
  return matrix;
}

std::vector<std::vector<std::uint64_t>> confusion_matrix(std::span<const std::string> truth,
                                                         std::span<const std::string> predicted,
                                                         std::span<const std::string> classes) {
  auto index_of = [&](const std::string& label) -> std::uint32_t {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) {
      throw DataError("unknown class label '" + label + "'");
    }
    return static_cast<std::uint32_t>(it - classes.begin());
  };
  std::vector<std::uint32_t> t;
  std::vector<std::uint32_t> p;
  for (const auto& label : truth) t.push_back(index_of(label));
  for (const auto& label : predicted) p.push_back(index_of(label));
  return confusion_matrix(t, p, classes.size());
}

}  // namespace grove
