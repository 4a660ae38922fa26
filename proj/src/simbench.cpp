#include "grove/simbench.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "grove/error.h"
#include "grove/evaluation.h"
#include "grove/forest.h"
#include "grove/io.h"
#include "grove/random.h"
#include "grove/reference/naive_forest.h"

namespace grove {

void validate(const SimSpec& spec) {
  if (spec.n == 0 || spec.p == 0) {
    throw UsageError("simulation needs n >= 1 and p >= 1");
  }
  if (spec.n_effect > spec.p) {
    throw UsageError("number of effect features exceeds p");
  }
  if (!(spec.maf_low > 0 && spec.maf_low <= spec.maf_high && spec.maf_high <= 0.5)) {
    throw UsageError("minor allele frequency range must satisfy 0 < low <= high <= 0.5");
  }
  if (!std::isfinite(spec.effect_size)) {
    throw UsageError("effect size must be finite");
  }
}

SnpSample simulate_snp_genotypes(const SimSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  SnpSample sample;
  sample.n = spec.n;
  sample.p = spec.p;
  sample.endpoint = spec.endpoint;
  sample.maf.resize(spec.p);
  for (auto& maf : sample.maf) {
    maf = spec.maf_low + (spec.maf_high - spec.maf_low) * rng.uniform01();
  }
  sample.genotypes.resize(spec.n * spec.p);
  for (std::size_t j = 0; j < spec.p; ++j) {
    const double maf = sample.maf[j];
    for (std::size_t i = 0; i < spec.n; ++i) {
      const int first = rng.uniform01() < maf;
      const int second = rng.uniform01() < maf;
      sample.genotypes[j * spec.n + i] = static_cast<std::uint8_t>(first + second);
    }
  }
  sample.response.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double predictor = 0.0;
    for (std::size_t j = 0; j < spec.n_effect; ++j) {
      predictor += sample.genotypes[j * spec.n + i] - 2.0 * sample.maf[j];
    }
    predictor *= spec.effect_size;
    if (spec.endpoint == Endpoint::Dichotomous) {
      const double probability = 1.0 / (1.0 + std::exp(-predictor));
      sample.response[i] = rng.uniform01() < probability ? 1.0 : 0.0;
    } else {
      sample.response[i] = predictor + rng.normal();
    }
  }
  return sample;
}

Dataset to_dataset(const SnpSample& sample, bool packed) {
  std::vector<FeatureColumn> columns;
  columns.reserve(sample.p);
  std::vector<double> values(sample.n);
  for (std::size_t j = 0; j < sample.p; ++j) {
    for (std::size_t i = 0; i < sample.n; ++i) {
      values[i] = sample.genotypes[j * sample.n + i];
    }
    auto name = "snp" + std::to_string(j + 1);
    if (packed) {
      columns.emplace_back(std::move(name), PackedGenotypes::pack(values));
    } else {
      columns.emplace_back(std::move(name), values);
    }
  }
  Response response;
  if (sample.endpoint == Endpoint::Dichotomous) {
    ClassificationResponse classes;
    classes.classes = {"0", "1"};
    classes.labels.reserve(sample.n);
    for (double y : sample.response) {
      classes.labels.push_back(y == 1.0 ? 1u : 0u);
    }
    response = std::move(classes);
  } else {
    response = RegressionResponse{sample.response};
  }
  return Dataset(std::move(columns), std::move(response));
}

Dataset simulate_snp_dataset(const SimSpec& spec, bool packed) {
  return to_dataset(simulate_snp_genotypes(spec), packed);
}

namespace {

std::optional<std::uint64_t> read_status_kib(const char* field) {
  std::ifstream status("/proc/self/status");
  std::string line;
  const std::string prefix = std::string(field) + ":";
  while (std::getline(status, line)) {
    if (line.rfind(prefix, 0) == 0) {
      std::istringstream fields(line.substr(prefix.size()));
      std::uint64_t kib = 0;
      if (fields >> kib) {
        return kib * 1024;
      }
    }
  }
  return std::nullopt;
}

struct ChildMessage {
  std::int32_t ok;
  std::uint64_t peak_bytes;
  double seconds;
  char error[256];
};

}  // namespace

MemoryMeasurement measure_peak_memory(const std::function<void()>& setup, const std::function<void()>& work) {
  MemoryMeasurement result;
  if (!read_status_kib("VmHWM")) {
    result.error = "peak RSS accounting unavailable";
    return result;
  }
  int fds[2];
  if (pipe(fds) != 0) {
    result.error = "pipe failed";
    return result;
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    result.error = "fork failed";
    return result;
  }
  if (pid == 0) {
    close(fds[0]);
    ChildMessage message{};
    try {
      setup();
      auto baseline = read_status_kib("VmRSS").value_or(0);
      // Resets VmHWM to the current RSS; without it the setup peak leaks in.
      std::ofstream reset("/proc/self/clear_refs");
      reset << "5";
      reset.close();
      if (!reset) {
        baseline = read_status_kib("VmHWM").value_or(baseline);
      }
      const auto start = std::chrono::steady_clock::now();
      work();
      const auto stop = std::chrono::steady_clock::now();
      const auto peak = read_status_kib("VmHWM").value_or(0);
      message.ok = 1;
      message.peak_bytes = peak > baseline ? peak - baseline : 0;
      message.seconds = std::chrono::duration<double>(stop - start).count();
    } catch (const std::exception& e) {
      std::strncpy(message.error, e.what(), sizeof(message.error) - 1);
    } catch (...) {
      std::strncpy(message.error, "unknown error", sizeof(message.error) - 1);
    }
    const auto* bytes = reinterpret_cast<const char*>(&message);
    std::size_t written = 0;
    while (written < sizeof(message)) {
      const auto w = write(fds[1], bytes + written, sizeof(message) - written);
      if (w <= 0) break;
      written += static_cast<std::size_t>(w);
    }
    close(fds[1]);
    _exit(0);
  }

  close(fds[1]);
  ChildMessage message{};
  auto* bytes = reinterpret_cast<char*>(&message);
  std::size_t received = 0;
  while (received < sizeof(message)) {
    const auto r = read(fds[0], bytes + received, sizeof(message) - received);
    if (r <= 0) break;
    received += static_cast<std::size_t>(r);
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (received != sizeof(message)) {
    result.error = WIFSIGNALED(status) ? "child terminated by signal " + std::to_string(WTERMSIG(status))
                                       : "child exited without reporting";
    return result;
  }
  if (message.ok != 1) {
    result.error = message.error;
    return result;
  }
  result.available = true;
  result.peak_bytes = message.peak_bytes;
  result.seconds = message.seconds;
  return result;
}

const char* to_string(BenchAxis axis) {
  switch (axis) {
    case BenchAxis::NumTrees:
      return "trees";
    case BenchAxis::NumFeatures:
      return "features";
    case BenchAxis::NumSamples:
      return "samples";
    case BenchAxis::MtryPercent:
      return "mtry";
  }
  return "unknown";
}

std::optional<BenchAxis> bench_axis_from_string(const std::string& name) {
  for (auto axis : {BenchAxis::NumTrees, BenchAxis::NumFeatures, BenchAxis::NumSamples, BenchAxis::MtryPercent}) {
    if (name == to_string(axis)) {
      return axis;
    }
  }
  return std::nullopt;
}

BenchReport run_scaling_benchmark(const BenchConfig& config) {
  if (config.grid.empty()) {
    throw UsageError("benchmark grid is empty");
  }
  if (!std::is_sorted(config.grid.begin(), config.grid.end())) {
    throw UsageError("benchmark grid must be ascending");
  }
  if (config.repeats == 0) {
    throw UsageError("benchmark needs at least one repeat");
  }
  if (config.tree_type != TreeType::Classification && config.tree_type != TreeType::Regression) {
    throw UsageError("benchmarks support classification and regression forests");
  }

  BenchReport report;
  report.axis = config.axis;
  for (std::size_t point_index = 0; point_index < config.grid.size(); ++point_index) {
    const double value = config.grid[point_index];
    BenchPoint point;
    point.value = value;

    SimSpec spec;
    spec.n = config.n;
    spec.p = config.p;
    spec.n_effect = std::min<std::size_t>(5, config.p);
    spec.endpoint = config.tree_type == TreeType::Classification ? Endpoint::Dichotomous : Endpoint::Continuous;
    GrowConfig grow;
    grow.tree_type = config.tree_type;
    grow.num_trees = config.num_trees;
    grow.min_node_size = config.tree_type == TreeType::Classification ? 1 : 25;
    grow.memory_mode = config.memory_mode;
    grow.worker_count = config.worker_count;
    double mtry_percent = config.mtry_percent;
    switch (config.axis) {
      case BenchAxis::NumTrees:
        grow.num_trees = static_cast<std::uint32_t>(value);
        break;
      case BenchAxis::NumFeatures:
        spec.p = static_cast<std::size_t>(value);
        spec.n_effect = std::min<std::size_t>(5, spec.p);
        break;
      case BenchAxis::NumSamples:
        spec.n = static_cast<std::size_t>(value);
        break;
      case BenchAxis::MtryPercent:
        mtry_percent = value;
        break;
    }
    if (mtry_percent > 0) {
      grow.mtry = static_cast<std::uint32_t>(
          std::clamp<double>(std::round(static_cast<double>(spec.p) * mtry_percent / 100.0), 1.0,
                             static_cast<double>(spec.p)));
    }

    for (std::uint32_t r = 0; r < config.repeats; ++r) {
      spec.seed = derive_seed(derive_seed(config.seed, point_index), r);
      grow.seed = spec.seed;
      const bool packed = config.memory_mode == MemoryMode::Gwas;
      try {
        if (config.measure_memory) {
          // Conversion to the mode's representation counts toward the peak.
          SnpSample sample;
          const auto measurement = measure_peak_memory([&] { sample = simulate_snp_genotypes(spec); },
                                                       [&] {
                                                         const auto data = to_dataset(sample, packed);
                                                         const auto forest = grow_forest(data, grow);
                                                       });
          if (!measurement.available) {
            point.error = measurement.error;
            continue;
          }
          point.peak_bytes = std::max(point.peak_bytes.value_or(0), measurement.peak_bytes);
        }
        const auto sample = simulate_snp_genotypes(spec);
        const auto data = to_dataset(sample, packed);
        const auto start = std::chrono::steady_clock::now();
        const auto forest = grow_forest(data, grow);
        point.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      } catch (const std::exception& e) {
        point.error = e.what();
      }
    }
    if (!point.seconds.empty()) {
      double sum = 0.0;
      for (double s : point.seconds) sum += s;
      point.mean_seconds = sum / static_cast<double>(point.seconds.size());
    }
    report.points.push_back(std::move(point));
  }
  return report;
}

void write_bench_report(const BenchReport& report, std::ostream& out) {
  out << "axis\tvalue\trepeats\tmean_seconds\tpeak_bytes\tstatus\n";
  for (const auto& point : report.points) {
    out << to_string(report.axis) << '\t' << format_number(point.value) << '\t' << point.seconds.size() << '\t'
        << format_number(point.mean_seconds) << '\t'
        << (point.peak_bytes ? std::to_string(*point.peak_bytes) : std::string("unavailable")) << '\t'
        << (point.error.empty() ? "ok" : point.error) << '\n';
  }
}

void write_bench_samples(const BenchReport& report, std::ostream& out) {
  out << "axis\tvalue\trepeat\tseconds\n";
  for (const auto& point : report.points) {
    for (std::size_t r = 0; r < point.seconds.size(); ++r) {
      out << to_string(report.axis) << '\t' << format_number(point.value) << '\t' << r << '\t'
          << format_number(point.seconds[r]) << '\n';
    }
  }
}

bool AgreementReport::all_within_limits() const {
  return std::all_of(rows.begin(), rows.end(), [&](const AgreementRow& row) {
    const double d = row.engine_error - row.reference_error;
    return d >= lower_limit && d <= upper_limit;
  });
}

AgreementReport run_validation_protocol(std::size_t num_datasets, const SimSpec& spec, const GrowConfig& config,
                                        const ReferenceModel& reference) {
  constexpr std::uint64_t kReferenceSalt = 0x5245464552454e43ULL;
  AgreementReport report;
  for (std::size_t d = 0; d < num_datasets; ++d) {
    SimSpec dataset_spec = spec;
    dataset_spec.seed = derive_seed(spec.seed, d);
    const auto data = simulate_snp_dataset(dataset_spec);
    GrowConfig grow = config;
    grow.seed = derive_seed(config.seed, d);
    const auto forest = grow_forest(data, grow);
    AgreementRow row;
    row.engine_error = oob_error(forest, data).error;
    row.reference_error = reference(data, derive_seed(config.seed ^ kReferenceSalt, d));
    report.rows.push_back(row);
  }
  if (report.rows.empty()) {
    return report;
  }
  const auto count = static_cast<double>(report.rows.size());
  double sum = 0.0;
  for (const auto& row : report.rows) sum += row.engine_error - row.reference_error;
  report.mean_difference = sum / count;
  double ss = 0.0;
  for (const auto& row : report.rows) {
    const double d = row.engine_error - row.reference_error - report.mean_difference;
    ss += d * d;
  }
  report.sd_difference = report.rows.size() > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
  report.lower_limit = report.mean_difference - 1.96 * report.sd_difference;
  report.upper_limit = report.mean_difference + 1.96 * report.sd_difference;
  return report;
}

ReferenceModel engine_reference(const GrowConfig& config) {
  return [config](const Dataset& data, std::uint64_t seed) {
    GrowConfig grow = config;
    grow.seed = seed;
    return oob_error(grow_forest(data, grow), data).error;
  };
}

ReferenceModel naive_reference(const GrowConfig& config) {
  return [config](const Dataset& data, std::uint64_t seed) {
    const auto resolved = resolve_config(data, config);
    reference::NaiveForestConfig naive;
    naive.num_trees = resolved.num_trees;
    naive.mtry = resolved.mtry;
    naive.min_node_size = resolved.min_node_size;
    naive.seed = seed;
    return reference::naive_oob_error(data, naive);
  };
}

void write_agreement_report(const AgreementReport& report, std::ostream& out) {
  out << "dataset\tengine_error\treference_error\tmean\tdifference\n";
  for (std::size_t d = 0; d < report.rows.size(); ++d) {
    const auto& row = report.rows[d];
    out << d << '\t' << format_number(row.engine_error) << '\t' << format_number(row.reference_error) << '\t'
        << format_number((row.engine_error + row.reference_error) / 2) << '\t'
        << format_number(row.engine_error - row.reference_error) << '\n';
  }
  out << "# mean_difference\t" << format_number(report.mean_difference) << '\n'
      << "# sd_difference\t" << format_number(report.sd_difference) << '\n'
      << "# lower_limit\t" << format_number(report.lower_limit) << '\n'
      << "# upper_limit\t" << format_number(report.upper_limit) << '\n';
}

}  // namespace grove
