#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "grove/data.h"
#include "grove/io.h"

namespace testing_support {

inline std::filesystem::path iris_path() { return std::filesystem::path(GROVE_TEST_DATA_DIR) / "iris.csv"; }

inline grove::Dataset load_iris() {
  return grove::build_dataset(grove::parse_dataset_file(iris_path()),
                              grove::ResponseSpec{grove::ResponseKind::Classification, "Species", ""});
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("grove_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::vector<grove::FeatureColumn> dense_columns(const std::vector<std::vector<double>>& columns) {
  std::vector<grove::FeatureColumn> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.emplace_back("x" + std::to_string(j + 1), columns[j]);
  }
  return out;
}

inline grove::Dataset classification_data(const std::vector<std::vector<double>>& columns,
                                          std::vector<std::uint32_t> labels, std::size_t num_classes) {
  grove::ClassificationResponse response;
  response.labels = std::move(labels);
  for (std::size_t k = 0; k < num_classes; ++k) response.classes.push_back("c" + std::to_string(k));
  return grove::Dataset(dense_columns(columns), std::move(response));
}

inline grove::Dataset regression_data(const std::vector<std::vector<double>>& columns, std::vector<double> y) {
  return grove::Dataset(dense_columns(columns), grove::RegressionResponse{std::move(y)});
}

inline grove::Dataset survival_data(const std::vector<std::vector<double>>& columns, std::vector<double> time,
                                    std::vector<std::uint8_t> status) {
  return grove::Dataset(dense_columns(columns), grove::SurvivalResponse{std::move(time), std::move(status)});
}

// Proportional-hazards toy: hazard exp(beta * x1), exponential event times,
// independent exponential censoring; x2..xp are noise.
inline grove::Dataset survival_toy(std::size_t n, std::size_t p, std::uint64_t seed, double beta = 1.5) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> unit(1.0);
  std::vector<std::vector<double>> x(p, std::vector<double>(n));
  std::vector<double> time(n);
  std::vector<std::uint8_t> status(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x[j][i] = normal(gen);
    const double event = unit(gen) / std::exp(beta * x[0][i]);
    const double censor = unit(gen) * 2.0;
    time[i] = std::min(event, censor);
    status[i] = event <= censor ? 1 : 0;
  }
  return survival_data(x, time, status);
}

}  // namespace testing_support
