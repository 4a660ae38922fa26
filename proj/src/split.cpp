#include "grove/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace grove {

const char* to_string(SplitStrategy strategy) {
  switch (strategy) {
    case SplitStrategy::Presorted:
      return "presorted";
    case SplitStrategy::SortOnDemand:
      return "sort-on-demand";
    case SplitStrategy::FixedLevels:
      return "fixed-levels";
  }
  return "unknown";
}

SplitTarget SplitTarget::gini(std::vector<std::uint32_t> labels, std::size_t num_classes) {
  SplitTarget target;
  target.criterion = SplitCriterion::Gini;
  target.labels = std::move(labels);
  target.num_classes = num_classes;
  return target;
}

SplitTarget SplitTarget::variance(std::vector<double> values) {
  SplitTarget target;
  target.criterion = SplitCriterion::Variance;
  target.values = std::move(values);
  return target;
}

SplitTarget SplitTarget::logrank(std::span<const double> time, std::vector<std::uint8_t> status,
                                 std::span<const double> timepoints) {
  if (time.size() != status.size()) {
    throw std::invalid_argument("time and status lengths differ");
  }
  SplitTarget target;
  target.criterion = SplitCriterion::LogRank;
  target.status = std::move(status);
  target.num_timepoints = timepoints.size();
  target.time_rank.reserve(time.size());
  for (double t : time) {
    const auto rank = std::upper_bound(timepoints.begin(), timepoints.end(), t) - timepoints.begin();
    target.time_rank.push_back(static_cast<std::uint32_t>(rank));
  }
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (target.status[i] == 1 &&
        (target.time_rank[i] == 0 || timepoints[target.time_rank[i] - 1] != time[i])) {
      throw std::invalid_argument("event time missing from timepoints");
    }
  }
  return target;
}

std::size_t SplitTarget::num_samples() const {
  switch (criterion) {
    case SplitCriterion::Gini:
      return labels.size();
    case SplitCriterion::Variance:
      return values.size();
    case SplitCriterion::LogRank:
      return time_rank.size();
  }
  return 0;
}

std::vector<double> event_timepoints(const SurvivalResponse& survival) {
  std::vector<double> times;
  for (std::size_t i = 0; i < survival.time.size(); ++i) {
    if (survival.status[i] == 1) {
      times.push_back(survival.time[i]);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

double gini_impurity(std::span<const std::uint64_t> class_counts) {
  const auto total = std::accumulate(class_counts.begin(), class_counts.end(), std::uint64_t{0});
  if (total == 0) {
    throw std::invalid_argument("gini impurity of an empty node");
  }
  double sum_sq = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

double gini_decrease(std::span<const std::uint64_t> parent, std::span<const std::uint64_t> left,
                     std::span<const std::uint64_t> right) {
  if (parent.size() != left.size() || parent.size() != right.size()) {
    throw std::invalid_argument("class count arrays differ in length");
  }
  for (std::size_t k = 0; k < parent.size(); ++k) {
    if (left[k] + right[k] != parent[k]) {
      throw std::invalid_argument("left and right counts do not sum to the parent counts");
    }
  }
  const auto n = static_cast<double>(std::accumulate(parent.begin(), parent.end(), std::uint64_t{0}));
  const auto n_left = static_cast<double>(std::accumulate(left.begin(), left.end(), std::uint64_t{0}));
  const auto n_right = static_cast<double>(std::accumulate(right.begin(), right.end(), std::uint64_t{0}));
  if (n_left == 0 || n_right == 0) {
    throw std::invalid_argument("split with an empty child");
  }
  return gini_impurity(parent) - n_left / n * gini_impurity(left) - n_right / n * gini_impurity(right);
}

namespace {

double population_variance(std::span<const double> values) {
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return ss / static_cast<double>(values.size());
}

double midpoint(double low, double high) {
  const double mid = (low + high) / 2;
  return mid < high ? mid : low;
}

}  // namespace

double variance_decrease(std::span<const double> parent, std::span<const double> left,
                         std::span<const double> right) {
  if (left.empty() || right.empty()) {
    throw std::invalid_argument("split with an empty child");
  }
  if (left.size() + right.size() != parent.size()) {
    throw std::invalid_argument("children sizes do not add up to the parent size");
  }
  const auto n = static_cast<double>(parent.size());
  return population_variance(parent) - static_cast<double>(left.size()) / n * population_variance(left) -
         static_cast<double>(right.size()) / n * population_variance(right);
}

std::optional<double> logrank_statistic(std::span<const double> left_time,
                                        std::span<const std::uint8_t> left_status,
                                        std::span<const double> right_time,
                                        std::span<const std::uint8_t> right_status) {
  if (left_time.size() != left_status.size() || right_time.size() != right_status.size()) {
    throw std::invalid_argument("time and status lengths differ");
  }
  if (left_time.empty() || right_time.empty()) {
    throw std::invalid_argument("log-rank statistic with an empty group");
  }
  struct Obs {
    double time;
    bool event;
    bool left;
  };
  std::vector<Obs> pooled;
  for (std::size_t i = 0; i < left_time.size(); ++i) {
    pooled.push_back({left_time[i], left_status[i] == 1, true});
  }
  for (std::size_t i = 0; i < right_time.size(); ++i) {
    pooled.push_back({right_time[i], right_status[i] == 1, false});
  }
  std::sort(pooled.begin(), pooled.end(), [](const Obs& a, const Obs& b) { return a.time < b.time; });

  double at_risk = static_cast<double>(pooled.size());
  double at_risk_left = static_cast<double>(left_time.size());
  double numerator = 0.0;
  double variance = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    double deaths = 0.0;
    double deaths_left = 0.0;
    double leaving_left = 0.0;
    for (; j < pooled.size() && pooled[j].time == pooled[i].time; ++j) {
      deaths += pooled[j].event;
      deaths_left += pooled[j].event && pooled[j].left;
      leaving_left += pooled[j].left;
    }
    if (deaths > 0) {
      numerator += deaths_left - at_risk_left * deaths / at_risk;
      if (at_risk > 1) {
        const double ratio = at_risk_left / at_risk;
        variance += ratio * (1 - ratio) * ((at_risk - deaths) / (at_risk - 1)) * deaths;
      }
    }
    at_risk -= static_cast<double>(j - i);
    at_risk_left -= leaving_left;
    i = j;
  }
  if (!(variance > 0)) {
    return std::nullopt;
  }
  return std::abs(numerator / std::sqrt(variance));
}

SplitStrategy select_split_strategy(std::uint64_t node_size, MemoryMode mode, bool packed_feature,
                                    std::uint64_t presort_threshold) {
  if (packed_feature) {
    return SplitStrategy::FixedLevels;
  }
  switch (mode) {
    case MemoryMode::RuntimeOptimized:
      return node_size > presort_threshold ? SplitStrategy::Presorted : SplitStrategy::SortOnDemand;
    case MemoryMode::MemoryEfficient:
    case MemoryMode::Gwas:
      return SplitStrategy::SortOnDemand;
  }
  return SplitStrategy::SortOnDemand;
}

struct SplitSearcher::Impl {
  struct ValueSample {
    double value;
    std::uint32_t row;
    std::uint32_t count;
  };

  static constexpr std::size_t kLevels = 3;

  const Dataset& data;
  const SplitTarget& target;
  std::span<const NodeSample> node;
  std::uint64_t node_size = 0;
  std::uint64_t left_n = 0;
  std::uint64_t bucket_n[kLevels] = {};

  std::vector<std::uint32_t> count_by_row;
  std::vector<std::uint32_t> marked_rows;
  bool rows_marked = false;
  std::vector<ValueSample> gathered;

  // Gini
  std::vector<std::uint64_t> parent_counts;
  std::vector<std::uint64_t> left_counts;
  std::vector<std::uint64_t> bucket_counts;
  double parent_sq = 0.0;

  // Variance
  double total_sum = 0.0;
  double left_sum = 0.0;
  double group_sum = 0.0;
  double bucket_sum[kLevels] = {};

  // Log-rank, over the node's distinct event times
  std::size_t num_events = 0;
  std::vector<std::uint32_t> local_rank;
  std::vector<std::uint32_t> event_ranks;
  std::vector<std::uint64_t> deaths;
  std::vector<std::uint64_t> at_risk;
  std::vector<std::uint64_t> left_deaths;
  std::vector<std::uint64_t> left_exits;
  std::vector<std::uint64_t> bucket_deaths;
  std::vector<std::uint64_t> bucket_exits;

  Impl(const Dataset& d, const SplitTarget& t) : data(d), target(t) {
    if (target.num_samples() != data.num_samples()) {
      throw std::invalid_argument("split target and dataset sizes differ");
    }
    count_by_row.assign(data.num_samples(), 0);
    if (target.criterion == SplitCriterion::Gini) {
      parent_counts.resize(target.num_classes);
      left_counts.resize(target.num_classes);
      bucket_counts.resize(kLevels * target.num_classes);
    }
    if (target.criterion == SplitCriterion::LogRank) {
      local_rank.assign(data.num_samples(), 0);
    }
  }

  void set_node(std::span<const NodeSample> samples) {
    if (rows_marked) {
      for (auto row : marked_rows) {
        count_by_row[row] = 0;
      }
      marked_rows.clear();
      rows_marked = false;
    }
    node = samples;
    node_size = 0;
    for (const auto& s : samples) {
      node_size += s.count;
    }
    switch (target.criterion) {
      case SplitCriterion::Gini: {
        std::fill(parent_counts.begin(), parent_counts.end(), 0);
        for (const auto& s : samples) {
          parent_counts[target.labels[s.row]] += s.count;
        }
        parent_sq = 0.0;
        for (auto c : parent_counts) {
          parent_sq += static_cast<double>(c * c);
        }
        break;
      }
      case SplitCriterion::Variance: {
        total_sum = 0.0;
        for (const auto& s : samples) {
          total_sum += s.count * target.values[s.row];
        }
        break;
      }
      case SplitCriterion::LogRank: {
        event_ranks.clear();
        for (const auto& s : samples) {
          if (target.status[s.row] == 1) {
            event_ranks.push_back(target.time_rank[s.row] - 1);
          }
        }
        std::sort(event_ranks.begin(), event_ranks.end());
        event_ranks.erase(std::unique(event_ranks.begin(), event_ranks.end()), event_ranks.end());
        num_events = event_ranks.size();
        deaths.assign(num_events, 0);
        at_risk.assign(num_events, 0);
        std::vector<std::uint64_t> exits(num_events + 1, 0);
        for (const auto& s : samples) {
          const auto rank = static_cast<std::uint32_t>(
              std::lower_bound(event_ranks.begin(), event_ranks.end(), target.time_rank[s.row]) -
              event_ranks.begin());
          local_rank[s.row] = rank;
          exits[rank] += s.count;
          if (target.status[s.row] == 1) {
            deaths[rank - 1] += s.count;
          }
        }
        std::uint64_t gone = 0;
        for (std::size_t k = 0; k < num_events; ++k) {
          gone += exits[k];
          at_risk[k] = node_size - gone;
        }
        left_deaths.resize(num_events);
        left_exits.resize(num_events + 1);
        bucket_deaths.resize(kLevels * num_events);
        bucket_exits.resize(kLevels * (num_events + 1));
        break;
      }
    }
  }

  bool node_is_pure() const {
    if (node.empty()) {
      return true;
    }
    switch (target.criterion) {
      case SplitCriterion::Gini:
        return std::any_of(parent_counts.begin(), parent_counts.end(), [&](auto c) { return c == node_size; });
      case SplitCriterion::Variance: {
        const double first = target.values[node.front().row];
        return std::all_of(node.begin(), node.end(), [&](const NodeSample& s) { return target.values[s.row] == first; });
      }
      case SplitCriterion::LogRank:
        return num_events == 0;
    }
    return true;
  }

  void reset_left() {
    left_n = 0;
    switch (target.criterion) {
      case SplitCriterion::Gini:
        std::fill(left_counts.begin(), left_counts.end(), 0);
        break;
      case SplitCriterion::Variance:
        left_sum = 0.0;
        group_sum = 0.0;
        break;
      case SplitCriterion::LogRank:
        std::fill(left_deaths.begin(), left_deaths.end(), 0);
        std::fill(left_exits.begin(), left_exits.end(), 0);
        break;
    }
  }

  void add(std::uint32_t row, std::uint32_t count) {
    left_n += count;
    switch (target.criterion) {
      case SplitCriterion::Gini:
        left_counts[target.labels[row]] += count;
        break;
      case SplitCriterion::Variance:
        group_sum += count * target.values[row];
        break;
      case SplitCriterion::LogRank: {
        const auto rank = local_rank[row];
        left_exits[rank] += count;
        if (target.status[row] == 1) {
          left_deaths[rank - 1] += count;
        }
        break;
      }
    }
  }

  // Response sums are merged once per distinct value so that the counting
  // pass of the fixed-level search produces the same floating-point sums.
  void close_group() {
    if (target.criterion == SplitCriterion::Variance) {
      left_sum += group_sum;
      group_sum = 0.0;
    }
  }

  void reset_buckets() {
    std::fill(std::begin(bucket_n), std::end(bucket_n), 0);
    std::fill(std::begin(bucket_sum), std::end(bucket_sum), 0.0);
    std::fill(bucket_counts.begin(), bucket_counts.end(), 0);
    std::fill(bucket_deaths.begin(), bucket_deaths.end(), 0);
    std::fill(bucket_exits.begin(), bucket_exits.end(), 0);
  }

  void add_to_bucket(std::size_t level, std::uint32_t row, std::uint32_t count) {
    bucket_n[level] += count;
    switch (target.criterion) {
      case SplitCriterion::Gini:
        bucket_counts[level * target.num_classes + target.labels[row]] += count;
        break;
      case SplitCriterion::Variance:
        bucket_sum[level] += count * target.values[row];
        break;
      case SplitCriterion::LogRank: {
        const auto rank = local_rank[row];
        bucket_exits[level * (num_events + 1) + rank] += count;
        if (target.status[row] == 1) {
          bucket_deaths[level * num_events + rank - 1] += count;
        }
        break;
      }
    }
  }

  void merge_bucket(std::size_t level) {
    left_n += bucket_n[level];
    switch (target.criterion) {
      case SplitCriterion::Gini:
        for (std::size_t k = 0; k < target.num_classes; ++k) {
          left_counts[k] += bucket_counts[level * target.num_classes + k];
        }
        break;
      case SplitCriterion::Variance:
        left_sum += bucket_sum[level];
        break;
      case SplitCriterion::LogRank:
        for (std::size_t k = 0; k < num_events; ++k) {
          left_deaths[k] += bucket_deaths[level * num_events + k];
        }
        for (std::size_t k = 0; k <= num_events; ++k) {
          left_exits[k] += bucket_exits[level * (num_events + 1) + k];
        }
        break;
    }
  }

  std::optional<double> gain() const {
    const std::uint64_t right_n = node_size - left_n;
    if (left_n == 0 || right_n == 0) {
      return std::nullopt;
    }
    const auto n = static_cast<double>(node_size);
    const auto nl = static_cast<double>(left_n);
    const auto nr = static_cast<double>(right_n);
    switch (target.criterion) {
      case SplitCriterion::Gini: {
        double sum_left = 0.0;
        double sum_right = 0.0;
        bool proportional = true;
        for (std::size_t k = 0; k < target.num_classes; ++k) {
          const auto l = left_counts[k];
          const auto r = parent_counts[k] - l;
          sum_left += static_cast<double>(l * l);
          sum_right += static_cast<double>(r * r);
          proportional = proportional && l * node_size == parent_counts[k] * left_n;
        }
        if (proportional) {
          return 0.0;
        }
        return (sum_left / nl + sum_right / nr - parent_sq / n) / n;
      }
      case SplitCriterion::Variance: {
        const double right_sum = total_sum - left_sum;
        return (left_sum * left_sum / nl + right_sum * right_sum / nr - total_sum * total_sum / n) / n;
      }
      case SplitCriterion::LogRank: {
        double numerator = 0.0;
        double variance = 0.0;
        std::uint64_t gone_left = 0;
        for (std::size_t k = 0; k < num_events; ++k) {
          gone_left += left_exits[k];
          const auto y = static_cast<double>(at_risk[k]);
          const auto yl = static_cast<double>(left_n - gone_left);
          const auto d = static_cast<double>(deaths[k]);
          numerator += static_cast<double>(left_deaths[k]) - yl * d / y;
          if (at_risk[k] > 1) {
            const double ratio = yl / y;
            variance += ratio * (1 - ratio) * ((y - d) / (y - 1)) * d;
          }
        }
        if (!(variance > 0)) {
          return std::nullopt;
        }
        return std::abs(numerator / std::sqrt(variance));
      }
    }
    return std::nullopt;
  }

  void consider(SplitResult& best, double low, double high) const {
    const auto g = gain();
    if (g && *g > best.gain) {
      best.gain = *g;
      best.threshold = midpoint(low, high);
      best.present = true;
    }
  }

  // Visits (value, row, count) in ascending (value, row) order.
  template <typename Stream>
  SplitResult scan(std::size_t feature, Stream&& stream) {
    reset_left();
    SplitResult best;
    best.feature = static_cast<std::uint32_t>(feature);
    bool first = true;
    double previous = 0.0;
    stream([&](double value, std::uint32_t row, std::uint32_t count) {
      if (!first && value != previous) {
        close_group();
        consider(best, previous, value);
      }
      add(row, count);
      previous = value;
      first = false;
    });
    return best;
  }

  SplitResult presorted(std::size_t feature, std::span<const std::uint32_t> sorted_index) {
    if (sorted_index.size() != data.num_samples()) {
      throw std::invalid_argument("sorted index not available for feature");
    }
    if (!rows_marked) {
      for (const auto& s : node) {
        count_by_row[s.row] = s.count;
        marked_rows.push_back(s.row);
      }
      rows_marked = true;
    }
    const auto& column = data.feature(feature);
    return scan(feature, [&](auto&& visit) {
      std::uint64_t seen = 0;
      if (column.is_packed()) {
        const auto& packed = column.packed();
        for (auto row : sorted_index) {
          if (const auto c = count_by_row[row]) {
            visit(static_cast<double>(packed.get(row)), row, c);
            if ((seen += c) == node_size) break;
          }
        }
      } else {
        const auto values = column.dense();
        for (auto row : sorted_index) {
          if (const auto c = count_by_row[row]) {
            visit(values[row], row, c);
            if ((seen += c) == node_size) break;
          }
        }
      }
    });
  }

  SplitResult sort_on_demand(std::size_t feature) {
    const auto& column = data.feature(feature);
    gathered.clear();
    if (column.is_packed()) {
      const auto& packed = column.packed();
      for (const auto& s : node) {
        gathered.push_back({static_cast<double>(packed.get(s.row)), s.row, s.count});
      }
    } else {
      const auto values = column.dense();
      for (const auto& s : node) {
        gathered.push_back({values[s.row], s.row, s.count});
      }
    }
    std::sort(gathered.begin(), gathered.end(), [](const ValueSample& a, const ValueSample& b) {
      return a.value < b.value || (a.value == b.value && a.row < b.row);
    });
    return scan(feature, [&](auto&& visit) {
      for (const auto& g : gathered) {
        visit(g.value, g.row, g.count);
      }
    });
  }

  SplitResult fixed_levels(std::size_t feature) {
    const auto& column = data.feature(feature);
    reset_left();
    reset_buckets();
    if (column.is_packed()) {
      const auto& packed = column.packed();
      for (const auto& s : node) {
        add_to_bucket(packed.get(s.row), s.row, s.count);
      }
    } else {
      const auto values = column.dense();
      for (const auto& s : node) {
        const double v = values[s.row];
        if (!(v == 0.0 || v == 1.0 || v == 2.0)) {
          throw std::invalid_argument("fixed-level search needs genotype values 0, 1 or 2");
        }
        add_to_bucket(static_cast<std::size_t>(v), s.row, s.count);
      }
    }
    SplitResult best;
    best.feature = static_cast<std::uint32_t>(feature);
    int previous = -1;
    for (std::size_t level = 0; level < kLevels; ++level) {
      if (bucket_n[level] == 0) {
        continue;
      }
      if (previous >= 0) {
        consider(best, previous, static_cast<double>(level));
      }
      merge_bucket(level);
      previous = static_cast<int>(level);
    }
    return best;
  }
};

SplitSearcher::SplitSearcher(const Dataset& data, const SplitTarget& target)
    : impl_(std::make_unique<Impl>(data, target)) {}

SplitSearcher::~SplitSearcher() = default;
SplitSearcher::SplitSearcher(SplitSearcher&&) noexcept = default;

void SplitSearcher::set_node(std::span<const NodeSample> samples) { impl_->set_node(samples); }

std::uint64_t SplitSearcher::node_size() const { return impl_->node_size; }

bool SplitSearcher::node_is_pure() const { return impl_->node_is_pure(); }

SplitResult SplitSearcher::presorted(std::size_t feature, std::span<const std::uint32_t> sorted_index) {
  return impl_->presorted(feature, sorted_index);
}

SplitResult SplitSearcher::sort_on_demand(std::size_t feature) { return impl_->sort_on_demand(feature); }

SplitResult SplitSearcher::fixed_levels(std::size_t feature) { return impl_->fixed_levels(feature); }

SplitResult best_split_presorted(const Dataset& data, const SplitTarget& target,
                                 std::span<const NodeSample> node, std::size_t feature,
                                 std::span<const std::uint32_t> sorted_index) {
  SplitSearcher searcher(data, target);
  searcher.set_node(node);
  return searcher.presorted(feature, sorted_index);
}

SplitResult best_split_sort_on_demand(const Dataset& data, const SplitTarget& target,
                                      std::span<const NodeSample> node, std::size_t feature) {
  SplitSearcher searcher(data, target);
  searcher.set_node(node);
  return searcher.sort_on_demand(feature);
}

SplitResult best_split_fixed_levels(const Dataset& data, const SplitTarget& target,
                                    std::span<const NodeSample> node, std::size_t feature) {
  SplitSearcher searcher(data, target);
  searcher.set_node(node);
  return searcher.fixed_levels(feature);
}

}  // namespace grove
