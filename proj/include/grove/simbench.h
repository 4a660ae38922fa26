#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "grove/data.h"
#include "grove/tree.h"

namespace grove {

enum class Endpoint { Dichotomous, Continuous };

// Coefficient per effect SNP on centered genotypes.
inline constexpr double kDefaultEffectSize = 1.0;

struct SimSpec {
  std::size_t n = 2000;
  std::size_t p = 50;
  std::size_t n_effect = 5;
  double effect_size = kDefaultEffectSize;
  double maf_low = 0.05;
  double maf_high = 0.5;
  Endpoint endpoint = Endpoint::Dichotomous;
  std::uint64_t seed = 1;
};

// Throws UsageError.
void validate(const SimSpec& spec);

// Compact simulated data: genotypes are column-major minor allele counts.
struct SnpSample {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::uint8_t> genotypes;
  std::vector<double> maf;
  std::vector<double> response;
  Endpoint endpoint = Endpoint::Dichotomous;
};

// SNP j has MAF uniform in [maf_low, maf_high] and genotypes
// Binomial(2, maf_j). The linear predictor is
// effect_size * sum over the first n_effect SNPs of (g - 2 maf). Dichotomous:
// P(Y = 1) = logistic(predictor); continuous: predictor + N(0, 1).
SnpSample simulate_snp_genotypes(const SimSpec& spec);

// Features "snp1".."snpP"; dichotomous responses become classes "0"/"1".
Dataset to_dataset(const SnpSample& sample, bool packed);

Dataset simulate_snp_dataset(const SimSpec& spec, bool packed = false);

struct MemoryMeasurement {
  bool available = false;
  // Peak resident set during work() minus the resident set after setup().
  std::uint64_t peak_bytes = 0;
  double seconds = 0.0;  // wall time of work()
  std::string error;
};

// Runs setup() and work() in a forked child and reads the kernel's peak RSS
// accounting. Unavailable platforms report available = false.
MemoryMeasurement measure_peak_memory(const std::function<void()>& setup, const std::function<void()>& work);

enum class BenchAxis { NumTrees, NumFeatures, NumSamples, MtryPercent };

const char* to_string(BenchAxis axis);
std::optional<BenchAxis> bench_axis_from_string(const std::string& name);

struct BenchConfig {
  BenchAxis axis = BenchAxis::NumTrees;
  std::vector<double> grid;
  std::size_t n = 1000;
  std::size_t p = 1000;
  std::uint32_t num_trees = 500;
  // 0 selects mtry = floor(sqrt(p)).
  double mtry_percent = 0.0;
  TreeType tree_type = TreeType::Classification;
  MemoryMode memory_mode = MemoryMode::RuntimeOptimized;
  std::uint32_t repeats = 1;
  std::uint64_t seed = 1;
  std::uint32_t worker_count = 0;
  // Fork one child per run to measure peak memory; otherwise time in-process.
  bool measure_memory = true;
};

struct BenchPoint {
  double value = 0.0;
  std::vector<double> seconds;
  double mean_seconds = 0.0;
  std::optional<std::uint64_t> peak_bytes;  // max over repeats
  std::string error;
};

struct BenchReport {
  BenchAxis axis = BenchAxis::NumTrees;
  std::vector<BenchPoint> points;
};

// Classification forests grow to purity (node size 1); regression forests
// stop at node size 25. Only forest growth is timed.
BenchReport run_scaling_benchmark(const BenchConfig& config);

void write_bench_report(const BenchReport& report, std::ostream& out);
// One line per (grid value, repeat) for plotting.
void write_bench_samples(const BenchReport& report, std::ostream& out);

struct AgreementRow {
  double engine_error = 0.0;
  double reference_error = 0.0;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;
  double mean_difference = 0.0;  // engine - reference
  double sd_difference = 0.0;
  double lower_limit = 0.0;  // mean - 1.96 sd
  double upper_limit = 0.0;  // mean + 1.96 sd

  bool all_within_limits() const;
};

// OOB error of a reference predictor on a dataset with a given seed.
using ReferenceModel = std::function<double(const Dataset&, std::uint64_t seed)>;

// Dataset d is simulated with derive_seed(spec.seed, d); the engine grows with
// derive_seed(config.seed, d) and the reference receives an unrelated seed.
AgreementReport run_validation_protocol(std::size_t num_datasets, const SimSpec& spec, const GrowConfig& config,
                                        const ReferenceModel& reference);

// This engine with its own seed, for self-comparison.
ReferenceModel engine_reference(const GrowConfig& config);
// The naive single-threaded forest in grove::reference.
ReferenceModel naive_reference(const GrowConfig& config);

void write_agreement_report(const AgreementReport& report, std::ostream& out);

}  // namespace grove
