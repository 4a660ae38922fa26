#include "grove/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "grove/error.h"

namespace grove {

const char* to_string(MemoryMode mode) {
  switch (mode) {
    case MemoryMode::RuntimeOptimized:
      return "runtime";
    case MemoryMode::MemoryEfficient:
      return "memory-efficient";
    case MemoryMode::Gwas:
      return "gwas";
  }
  return "unknown";
}

PackedGenotypes PackedGenotypes::pack(std::span<const double> values) {
  PackedGenotypes packed;
  packed.size_ = values.size();
  packed.bytes_.assign((values.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v == 0.0 || v == 1.0 || v == 2.0)) {
      throw GenotypeError("genotype value at index " + std::to_string(i) + " is not 0, 1 or 2", i);
    }
    packed.bytes_[i >> 2] |= static_cast<std::uint8_t>(static_cast<unsigned>(v) << ((i & 3u) << 1));
  }
  return packed;
}

std::vector<double> PackedGenotypes::decode() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    out[i] = get(i);
  }
  return out;
}

FeatureColumn::FeatureColumn(std::string name, std::vector<double> values)
    : name_(std::move(name)), storage_(std::move(values)) {}

FeatureColumn::FeatureColumn(std::string name, PackedGenotypes genotypes)
    : name_(std::move(name)), storage_(std::move(genotypes)) {}

std::size_t FeatureColumn::size() const {
  if (const auto* dense = std::get_if<std::vector<double>>(&storage_)) {
    return dense->size();
  }
  return std::get<PackedGenotypes>(storage_).size();
}

std::size_t FeatureColumn::memory_bytes() const {
  if (const auto* dense = std::get_if<std::vector<double>>(&storage_)) {
    return dense->size() * sizeof(double);
  }
  return std::get<PackedGenotypes>(storage_).payload_bytes();
}

Dataset::Dataset(std::vector<FeatureColumn> features, Response response)
    : features_(std::move(features)), response_(std::move(response)) {
  std::visit(
      [this](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ClassificationResponse>) {
          num_samples_ = r.labels.size();
          if (r.classes.size() < 2) {
            throw DataError("classification response needs at least 2 classes");
          }
          for (auto label : r.labels) {
            if (label >= r.classes.size()) {
              throw DataError("class label index out of range");
            }
          }
        } else if constexpr (std::is_same_v<T, RegressionResponse>) {
          num_samples_ = r.values.size();
        } else if constexpr (std::is_same_v<T, SurvivalResponse>) {
          num_samples_ = r.time.size();
          if (r.status.size() != r.time.size()) {
            throw DataError("survival time and status lengths differ");
          }
          if (std::none_of(r.status.begin(), r.status.end(), [](auto s) { return s == 1; })) {
            throw DataError("survival response has no events");
          }
        } else {
          num_samples_ = features_.empty() ? 0 : features_.front().size();
        }
      },
      response_);

  std::unordered_set<std::string> names;
  for (const auto& column : features_) {
    if (column.size() != num_samples_) {
      throw DataError("column '" + column.name() + "' has " + std::to_string(column.size()) +
                      " values, expected " + std::to_string(num_samples_));
    }
    if (!names.insert(column.name()).second) {
      throw DataError("duplicate feature name '" + column.name() + "'");
    }
  }
  sorted_index_cache_.resize(features_.size());
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features_.size());
  for (const auto& column : features_) {
    names.push_back(column.name());
  }
  return names;
}

std::optional<std::size_t> Dataset::feature_index(const std::string& name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name() == name) {
      return j;
    }
  }
  return std::nullopt;
}

ResponseKind Dataset::response_kind() const {
  switch (response_.index()) {
    case 1:
      return ResponseKind::Classification;
    case 2:
      return ResponseKind::Regression;
    case 3:
      return ResponseKind::Survival;
    default:
      return ResponseKind::None;
  }
}

const ClassificationResponse& Dataset::classification() const {
  if (const auto* r = std::get_if<ClassificationResponse>(&response_)) {
    return *r;
  }
  throw DataError("dataset has no classification response");
}

const RegressionResponse& Dataset::regression() const {
  if (const auto* r = std::get_if<RegressionResponse>(&response_)) {
    return *r;
  }
  throw DataError("dataset has no regression response");
}

const SurvivalResponse& Dataset::survival() const {
  if (const auto* r = std::get_if<SurvivalResponse>(&response_)) {
    return *r;
  }
  throw DataError("dataset has no survival response");
}

std::span<const std::uint32_t> Dataset::build_sorted_index(std::size_t j) {
  auto& cache = sorted_index_cache_.at(j);
  if (cache.empty() && num_samples_ > 0) {
    const auto& column = features_[j];
    if (column.is_packed()) {
      cache = sorted_permutation(column.packed().decode());
    } else {
      cache = sorted_permutation(column.dense());
    }
  }
  return cache;
}

void Dataset::build_all_sorted_indices() {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    build_sorted_index(j);
  }
}

std::span<const std::uint32_t> Dataset::sorted_index(std::size_t j) const {
  return sorted_index_cache_.at(j);
}

bool Dataset::has_sorted_index(std::size_t j) const {
  return !sorted_index_cache_.at(j).empty() || num_samples_ == 0;
}

std::size_t Dataset::memory_bytes() const {
  std::size_t total = 0;
  for (const auto& column : features_) {
    total += column.memory_bytes();
  }
  for (const auto& index : sorted_index_cache_) {
    total += index.size() * sizeof(std::uint32_t);
  }
  return total;
}

Dataset Dataset::with_packed_genotypes() const {
  std::vector<FeatureColumn> columns;
  columns.reserve(features_.size());
  for (const auto& column : features_) {
    if (column.is_packed()) {
      columns.push_back(column);
      continue;
    }
    const auto values = column.dense();
    const bool genotype =
        std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0 || v == 2.0; });
    columns.push_back(genotype ? pack_genotypes(column) : column);
  }
  return Dataset(std::move(columns), response_);
}

std::size_t NamedColumn::size() const {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

namespace {

std::string number_label(double v) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, end);
}

const std::vector<double>& numeric_values(const NamedColumn& column, const char* role) {
  if (const auto* numbers = std::get_if<std::vector<double>>(&column.values)) {
    return *numbers;
  }
  throw DataError(std::string(role) + " column '" + column.name + "' is not numeric");
}

void require_finite(const NamedColumn& column, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("column '" + column.name + "' has a non-finite value at row " + std::to_string(i + 1));
    }
  }
}

ClassificationResponse make_classification(const NamedColumn& column) {
  std::vector<std::string> labels;
  if (const auto* strings = std::get_if<std::vector<std::string>>(&column.values)) {
    labels = *strings;
  } else {
    const auto& numbers = std::get<std::vector<double>>(column.values);
    require_finite(column, numbers);
    labels.reserve(numbers.size());
    for (double v : numbers) {
      labels.push_back(number_label(v));
    }
  }
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw DataError("response column '" + column.name + "' has fewer than 2 distinct classes");
  }
  ClassificationResponse response;
  response.classes.assign(distinct.begin(), distinct.end());
  response.labels.reserve(labels.size());
  for (const auto& label : labels) {
    auto it = std::lower_bound(response.classes.begin(), response.classes.end(), label);
    response.labels.push_back(static_cast<std::uint32_t>(it - response.classes.begin()));
  }
  return response;
}

}  // namespace

Dataset build_dataset(std::vector<NamedColumn> columns, const ResponseSpec& spec) {
  if (columns.empty()) {
    throw DataError("no columns");
  }
  const std::size_t n = columns.front().size();
  for (const auto& column : columns) {
    if (column.size() != n) {
      throw DataError("column '" + column.name + "' has " + std::to_string(column.size()) +
                      " values, expected " + std::to_string(n));
    }
  }

  auto find = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i].name == name) {
        return i;
      }
    }
    throw DataError("unknown response column '" + name + "'");
  };

  std::vector<bool> is_response(columns.size(), false);
  Response response;
  switch (spec.kind) {
    case ResponseKind::None:
      break;
    case ResponseKind::Classification: {
      const auto i = find(spec.column);
      is_response[i] = true;
      response = make_classification(columns[i]);
      break;
    }
    case ResponseKind::Regression: {
      const auto i = find(spec.column);
      is_response[i] = true;
      const auto& values = numeric_values(columns[i], "response");
      require_finite(columns[i], values);
      response = RegressionResponse{values};
      break;
    }
    case ResponseKind::Survival: {
      const auto ti = find(spec.column);
      const auto si = find(spec.status_column);
      if (ti == si) {
        throw DataError("time and status columns must differ");
      }
      is_response[ti] = is_response[si] = true;
      const auto& time = numeric_values(columns[ti], "time");
      const auto& status = numeric_values(columns[si], "status");
      require_finite(columns[ti], time);
      SurvivalResponse survival;
      survival.time = time;
      survival.status.reserve(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (time[r] < 0) {
          throw DataError("negative survival time at row " + std::to_string(r + 1));
        }
        if (status[r] != 0.0 && status[r] != 1.0) {
          throw DataError("status must be 0 or 1 at row " + std::to_string(r + 1));
        }
        survival.status.push_back(static_cast<std::uint8_t>(status[r]));
      }
      response = std::move(survival);
      break;
    }
  }

  std::vector<FeatureColumn> features;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (is_response[i]) {
      continue;
    }
    auto& column = columns[i];
    auto* values = std::get_if<std::vector<double>>(&column.values);
    if (values == nullptr) {
      throw DataError("feature column '" + column.name + "' is not numeric");
    }
    require_finite(column, *values);
    features.emplace_back(std::move(column.name), std::move(*values));
  }
  return Dataset(std::move(features), std::move(response));
}

FeatureColumn pack_genotypes(const FeatureColumn& column) {
  if (column.is_packed()) {
    return column;
  }
  return FeatureColumn(column.name(), PackedGenotypes::pack(column.dense()));
}

std::vector<std::uint32_t> sorted_permutation(std::span<const double> values) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  return order;
}

}  // namespace grove
