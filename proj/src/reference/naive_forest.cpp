#include "grove/reference/naive_forest.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace grove::reference {

namespace {

struct Node {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

double gini_of(const std::vector<double>& counts, double total) {
  double impurity = 1.0;
  for (double c : counts) {
    impurity -= (c / total) * (c / total);
  }
  return impurity;
}

class NaiveTree {
 public:
  NaiveTree(const Dataset& data, const NaiveForestConfig& config, std::mt19937_64& gen)
      : data_(data), config_(config), gen_(gen) {
    classification_ = data.response_kind() == ResponseKind::Classification;
    if (classification_) {
      num_classes_ = data.classification().classes.size();
    }
  }

  void fit(std::vector<std::size_t> rows) { build(std::move(rows)); }

  double predict(std::size_t row) const {
    int node = 0;
    while (nodes_[node].feature >= 0) {
      const auto& n = nodes_[node];
      node = data_.value(row, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right;
    }
    return nodes_[node].value;
  }

 private:
  double response(std::size_t row) const {
    return classification_ ? static_cast<double>(data_.classification().labels[row]) : data_.regression().values[row];
  }

  double leaf_value(const std::vector<std::size_t>& rows) const {
    if (classification_) {
      std::vector<double> counts(num_classes_, 0.0);
      for (auto r : rows) counts[static_cast<std::size_t>(response(r))] += 1;
      return static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    double sum = 0.0;
    for (auto r : rows) sum += response(r);
    return sum / static_cast<double>(rows.size());
  }

  bool pure(const std::vector<std::size_t>& rows) const {
    const double first = response(rows.front());
    return std::all_of(rows.begin(), rows.end(), [&](auto r) { return response(r) == first; });
  }

  // Returns (decrease, threshold) of the best boundary for one feature.
  std::pair<double, double> best_for_feature(const std::vector<std::size_t>& rows, std::size_t feature) const {
    std::vector<std::pair<double, double>> points;  // (value, response)
    for (auto r : rows) points.emplace_back(data_.value(r, feature), response(r));
    std::sort(points.begin(), points.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto n = static_cast<double>(points.size());
    double best = 0.0;
    double threshold = 0.0;
    if (classification_) {
      std::vector<double> right(num_classes_, 0.0);
      std::vector<double> left(num_classes_, 0.0);
      for (const auto& pt : points) right[static_cast<std::size_t>(pt.second)] += 1;
      const double parent = gini_of(right, n);
      for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        left[static_cast<std::size_t>(points[i].second)] += 1;
        right[static_cast<std::size_t>(points[i].second)] -= 1;
        if (points[i].first == points[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double decrease = parent - nl / n * gini_of(left, nl) - nr / n * gini_of(right, nr);
        if (decrease > best + 1e-12) {
          best = decrease;
          threshold = (points[i].first + points[i + 1].first) / 2;
        }
      }
    } else {
      double total = 0.0;
      for (const auto& pt : points) total += pt.second;
      const double mean = total / n;
      double parent_var = 0.0;
      for (const auto& pt : points) parent_var += (pt.second - mean) * (pt.second - mean);
      parent_var /= n;
      double left_sum = 0.0;
      double left_sq = 0.0;
      double total_sq = 0.0;
      for (const auto& pt : points) total_sq += pt.second * pt.second;
      for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        left_sum += points[i].second;
        left_sq += points[i].second * points[i].second;
        if (points[i].first == points[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double right_sum = total - left_sum;
        const double var_l = left_sq / nl - (left_sum / nl) * (left_sum / nl);
        const double var_r = (total_sq - left_sq) / nr - (right_sum / nr) * (right_sum / nr);
        const double decrease = parent_var - nl / n * var_l - nr / n * var_r;
        if (decrease > best + 1e-12) {
          best = decrease;
          threshold = (points[i].first + points[i + 1].first) / 2;
        }
      }
    }
    return {best, threshold};
  }

  int build(std::vector<std::size_t> rows) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (rows.size() <= config_.min_node_size || pure(rows)) {
      nodes_[id].value = leaf_value(rows);
      return id;
    }
    std::vector<std::size_t> features(data_.num_features());
    std::iota(features.begin(), features.end(), std::size_t{0});
    std::shuffle(features.begin(), features.end(), gen_);
    features.resize(config_.mtry);

    double best = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (auto f : features) {
      const auto [decrease, threshold] = best_for_feature(rows, f);
      if (decrease > best) {
        best = decrease;
        best_feature = static_cast<int>(f);
        best_threshold = threshold;
      }
    }
    if (best_feature < 0) {
      nodes_[id].value = leaf_value(rows);
      return id;
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto r : rows) {
      (data_.value(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best_feature;
    nodes_[id].threshold = best_threshold;
    const int l = build(std::move(left));
    const int r = build(std::move(right));
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  const Dataset& data_;
  const NaiveForestConfig& config_;
  std::mt19937_64& gen_;
  bool classification_ = false;
  std::size_t num_classes_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace

double naive_oob_error(const Dataset& data, const NaiveForestConfig& config) {
  const auto kind = data.response_kind();
  if (kind != ResponseKind::Classification && kind != ResponseKind::Regression) {
    throw std::invalid_argument("naive forest supports classification and regression only");
  }
  if (config.mtry == 0 || config.mtry > data.num_features()) {
    throw std::invalid_argument("naive forest: invalid mtry");
  }
  const bool classification = kind == ResponseKind::Classification;
  const auto n = data.num_samples();
  const auto num_classes = classification ? data.classification().classes.size() : 0;

  std::mt19937_64 gen(config.seed);
  std::uniform_int_distribution<std::size_t> draw(0, n - 1);
  std::vector<std::vector<double>> votes(n, std::vector<double>(std::max<std::size_t>(num_classes, 1), 0.0));
  std::vector<double> sums(n, 0.0);
  std::vector<int> oob_count(n, 0);

  for (std::uint32_t t = 0; t < config.num_trees; ++t) {
    std::vector<std::size_t> rows(n);
    std::vector<bool> inbag(n, false);
    for (auto& r : rows) {
      r = draw(gen);
      inbag[r] = true;
    }
    NaiveTree tree(data, config, gen);
    tree.fit(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) {
      if (inbag[i]) continue;
      const double prediction = tree.predict(i);
      ++oob_count[i];
      if (classification) {
        votes[i][static_cast<std::size_t>(prediction)] += 1;
      } else {
        sums[i] += prediction;
      }
    }
  }

  double loss = 0.0;
  std::size_t evaluated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (oob_count[i] == 0) continue;
    ++evaluated;
    if (classification) {
      const auto predicted = std::max_element(votes[i].begin(), votes[i].end()) - votes[i].begin();
      loss += static_cast<std::size_t>(predicted) != data.classification().labels[i];
    } else {
      const double d = sums[i] / oob_count[i] - data.regression().values[i];
      loss += d * d;
    }
  }
  if (evaluated == 0) {
    throw std::runtime_error("naive forest: no OOB samples");
  }
  return loss / static_cast<double>(evaluated);
}

}  // namespace grove::reference
