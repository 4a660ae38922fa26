#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace grove {

enum class MemoryMode { RuntimeOptimized, MemoryEfficient, Gwas };

const char* to_string(MemoryMode mode);

// Genotype column stored as 2-bit minor allele counts, four cells per byte.
class PackedGenotypes {
 public:
  PackedGenotypes() = default;

  // Throws GenotypeError naming the first value outside {0, 1, 2}.
  static PackedGenotypes pack(std::span<const double> values);

  std::size_t size() const { return size_; }
  std::size_t payload_bytes() const { return bytes_.size(); }

  std::uint8_t get(std::size_t i) const {
    return static_cast<std::uint8_t>((bytes_[i >> 2] >> ((i & 3u) << 1)) & 3u);
  }

  std::vector<double> decode() const;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t size_ = 0;
};

class FeatureColumn {
 public:
  FeatureColumn(std::string name, std::vector<double> values);
  FeatureColumn(std::string name, PackedGenotypes genotypes);

  const std::string& name() const { return name_; }
  std::size_t size() const;
  bool is_packed() const { return std::holds_alternative<PackedGenotypes>(storage_); }

  double value(std::size_t i) const {
    if (const auto* dense = std::get_if<std::vector<double>>(&storage_)) {
      return (*dense)[i];
    }
    return std::get<PackedGenotypes>(storage_).get(i);
  }

  // Only valid for dense columns.
  std::span<const double> dense() const { return std::get<std::vector<double>>(storage_); }
  // Only valid for packed columns.
  const PackedGenotypes& packed() const { return std::get<PackedGenotypes>(storage_); }

  std::size_t memory_bytes() const;

 private:
  std::string name_;
  std::variant<std::vector<double>, PackedGenotypes> storage_;
};

enum class ResponseKind { None, Classification, Regression, Survival };

struct ClassificationResponse {
  std::vector<std::uint32_t> labels;
  std::vector<std::string> classes;
};

struct RegressionResponse {
  std::vector<double> values;
};

struct SurvivalResponse {
  std::vector<double> time;
  std::vector<std::uint8_t> status;  // 0 = censored, 1 = event
};

// monostate marks prediction-only data without a response.
using Response =
    std::variant<std::monostate, ClassificationResponse, RegressionResponse, SurvivalResponse>;

// Column-major, immutable feature matrix plus response. The sorted index cache
// is the only mutable part and must be filled before concurrent use.
class Dataset {
 public:
  Dataset(std::vector<FeatureColumn> features, Response response);

  std::size_t num_samples() const { return num_samples_; }
  std::size_t num_features() const { return features_.size(); }

  const FeatureColumn& feature(std::size_t j) const { return features_[j]; }
  const std::vector<FeatureColumn>& features() const { return features_; }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> feature_index(const std::string& name) const;

  double value(std::size_t row, std::size_t j) const { return features_[j].value(row); }

  const Response& response() const { return response_; }
  ResponseKind response_kind() const;

  const ClassificationResponse& classification() const;
  const RegressionResponse& regression() const;
  const SurvivalResponse& survival() const;

  std::span<const std::uint32_t> build_sorted_index(std::size_t j);
  void build_all_sorted_indices();
  // Empty span when the index has not been built.
  std::span<const std::uint32_t> sorted_index(std::size_t j) const;
  bool has_sorted_index(std::size_t j) const;

  // Bytes held by feature storage and the sorted index cache.
  std::size_t memory_bytes() const;

  // Copy with every dense column whose values lie in {0, 1, 2} packed.
  Dataset with_packed_genotypes() const;

 private:
  std::vector<FeatureColumn> features_;
  Response response_;
  std::size_t num_samples_ = 0;
  std::vector<std::vector<std::uint32_t>> sorted_index_cache_;
};

// Column as read from a data file: numeric when every cell parsed as a number.
struct NamedColumn {
  std::string name;
  std::variant<std::vector<double>, std::vector<std::string>> values;

  std::size_t size() const;
};

struct ResponseSpec {
  ResponseKind kind = ResponseKind::None;
  std::string column;
  std::string status_column;  // survival only
};

Dataset build_dataset(std::vector<NamedColumn> columns, const ResponseSpec& spec);

FeatureColumn pack_genotypes(const FeatureColumn& column);

// Stable ascending-order permutation of values.
std::vector<std::uint32_t> sorted_permutation(std::span<const double> values);

}  // namespace grove
