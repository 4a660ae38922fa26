// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
//   grove_acceptance --cli <path to grove> --iris <iris.csv> [--only N]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "grove/evaluation.h"
#include "grove/io.h"
#include "grove/random.h"
#include "grove/reference/naive_forest.h"
#include "grove/simbench.h"
#include "grove/split.h"
#include "oracles.h"
#include "split_fuzz.h"
#include "support.h"

using namespace grove;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Settings {
  std::string cli;
  std::string iris;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << x;
  return out.str();
}

std::string sci(double x) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(2) << x;
  return out.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs a shell command with stdout and stderr sent to files; returns the exit code.
int run(const std::string& command, const std::string& stdout_path, const std::string& stderr_path) {
  const int status = std::system((command + " >" + quote(stdout_path) + " 2>" + quote(stderr_path)).c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset load_iris(const Settings& s) {
  return build_dataset(parse_dataset_file(s.iris), ResponseSpec{ResponseKind::Classification, "Species", ""});
}

GrowConfig iris_config(std::uint64_t seed) {
  GrowConfig c;
  c.num_trees = 500;
  c.mtry = 2;
  c.min_node_size = 1;
  c.seed = seed;
  return c;
}

Outcome iris_oob(const Settings& s) {
  const auto iris = load_iris(s);
  std::vector<double> errors;
  Stopwatch total;
  double slowest = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Stopwatch one;
    const auto forest = grow_forest(iris, iris_config(seed));
    errors.push_back(oob_error(forest, iris).error);
    slowest = std::max(slowest, one.seconds());
  }
  const double m = median(errors);
  const auto [lo, hi] = std::minmax_element(errors.begin(), errors.end());
  return {m >= 0.02 && m <= 0.08 && total.seconds() < 5.0,
          "median OOB error " + fmt(m) + " (range " + fmt(*lo) + ".." + fmt(*hi) + "), 20 fits in " +
              fmt(total.seconds(), 2) + " s, slowest fit " + fmt(slowest, 3) + " s"};
}

Outcome iris_importance(const Settings& s) {
  const auto iris = load_iris(s);
  std::vector<std::vector<double>> values(4);
  Stopwatch total;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = iris_config(seed);
    c.importance_mode = ImportanceMode::PermutationRaw;
    const auto report = compute_importance(grow_forest(iris, c), iris);
    for (std::size_t j = 0; j < 4; ++j) values[j].push_back(report.values[j]);
  }
  const double sl = median(values[0]), sw = median(values[1]), pl = median(values[2]), pw = median(values[3]);
  const bool ok = pl > 0.25 && pw > 0.15 && sw < 0.05 && pl > pw && pw > sl && sl > sw && total.seconds() < 30.0;
  return {ok, "medians Sepal.Length " + fmt(sl) + ", Sepal.Width " + fmt(sw) + ", Petal.Length " + fmt(pl) +
                  ", Petal.Width " + fmt(pw) + " in " + fmt(total.seconds(), 2) + " s"};
}

Outcome split_equivalence(const Settings&) {
  std::mt19937_64 gen(20240601);
  std::size_t disagreements = 0;
  std::string first;
  for (int i = 0; i < 10000; ++i) {
    const auto outcome = split_fuzz::run_case(gen);
    if (!outcome.agree && disagreements++ == 0) first = "case " + std::to_string(i) + ": " + outcome.detail;
  }
  return {disagreements == 0,
          std::to_string(10000 - disagreements) + "/10000 cases agree" + (first.empty() ? "" : "; first mismatch " + first)};
}

Outcome validation_agreement(const Settings&) {
  SimSpec spec;
  spec.n = 500;
  spec.p = 50;
  spec.n_effect = 5;
  GrowConfig c;
  c.num_trees = 5000;
  Stopwatch clock;
  const auto report = run_validation_protocol(20, spec, c, naive_reference(c));
  const double width = report.upper_limit - report.lower_limit;
  double max_z = 0;
  for (const auto& row : report.rows) {
    const double difference = row.engine_error - row.reference_error;
    max_z = std::max(max_z, std::abs(difference - report.mean_difference) / report.sd_difference);
  }
  const bool ok = std::abs(report.mean_difference) <= 0.01 && report.all_within_limits() && width < 0.04 &&
                  clock.seconds() < 600.0;
  return {ok, "mean difference " + fmt(report.mean_difference) + ", limits [" + fmt(report.lower_limit) + ", " +
                  fmt(report.upper_limit) + "] width " + fmt(width) + ", all within " +
                  (report.all_within_limits() ? "yes" : "no") + " (largest |difference - mean| / SD " + fmt(max_z, 3) +
                  "), " + fmt(clock.seconds(), 1) + " s"};
}

Outcome importance_validity(const Settings&) {
  constexpr std::size_t kReps = 50;
  SimSpec spec;
  spec.n = 1000;
  spec.p = 50;
  spec.n_effect = 5;
  std::vector<std::vector<double>> gini(spec.p), perm(spec.p);
  Stopwatch clock;
  for (std::size_t r = 0; r < kReps; ++r) {
    spec.seed = derive_seed(77, r);
    const auto data = simulate_snp_dataset(spec);
    GrowConfig c;
    c.num_trees = 300;
    c.seed = r;
    c.importance_mode = ImportanceMode::Gini;
    const auto forest = grow_forest(data, c);
    const auto g = gini_importance(forest);
    const auto p = permutation_importance(forest, data, false, derive_seed(c.seed, 1));
    for (std::size_t j = 0; j < spec.p; ++j) {
      gini[j].push_back(g.values[j]);
      perm[j].push_back(p.values[j]);
    }
  }
  auto check = [&](const std::vector<std::vector<double>>& v, double& weakest_effect, double& strongest_noise) {
    weakest_effect = INFINITY;
    strongest_noise = -INFINITY;
    for (std::size_t j = 0; j < spec.p; ++j) {
      const double m = median(v[j]);
      if (j < spec.n_effect) {
        weakest_effect = std::min(weakest_effect, m);
      } else {
        strongest_noise = std::max(strongest_noise, m);
      }
    }
    return weakest_effect > strongest_noise;
  };
  double ge, gn, pe, pn;
  const bool gini_ok = check(gini, ge, gn);
  const bool perm_ok = check(perm, pe, pn);
  return {gini_ok && perm_ok, "Gini: weakest effect median " + fmt(ge, 5) + " vs strongest noise " + fmt(gn, 5) +
                                  "; permutation: " + fmt(pe, 5) + " vs " + fmt(pn, 5) + " (" +
                                  std::to_string(kReps) + " reps, " + fmt(clock.seconds(), 1) + " s)"};
}

Outcome sampler_uniformity(const Settings&) {
  constexpr int kDraws = 100000;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> counts;
  Rng rng(4242);
  for (int i = 0; i < kDraws; ++i) {
    auto s = sample_without_replacement(5, 2, rng);
    std::sort(s.begin(), s.end());
    ++counts[{s[0], s[1]}];
  }
  double chi = 0;
  const double expected = kDraws / 10.0;
  for (const auto& [subset, count] : counts) chi += (count - expected) * (count - expected) / expected;
  chi += expected * static_cast<double>(10 - counts.size());
  const double pvalue = oracle::chi_square_upper_tail(chi, 9);

  double lo = 1, hi = 0;
  for (int b = 0; b < 20; ++b) {
    const double f = static_cast<double>(bootstrap(10000, rng).oob_indices.size()) / 10000.0;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  const bool ok = counts.size() == 10 && pvalue > 0.001 && lo >= 0.35 && hi <= 0.39;
  return {ok, "chi-square " + fmt(chi, 3) + " on 9 df, p = " + fmt(pvalue) + "; OOB fraction over 20 bootstraps " +
                  fmt(lo) + ".." + fmt(hi)};
}

void write_snp_csv(const SnpSample& sample, const std::string& path) {
  std::ofstream out(path);
  for (std::size_t j = 0; j < sample.p; ++j) out << "snp" << j + 1 << ',';
  out << "y\n";
  for (std::size_t i = 0; i < sample.n; ++i) {
    for (std::size_t j = 0; j < sample.p; ++j) out << static_cast<int>(sample.genotypes[j * sample.n + i]) << ',';
    out << sample.response[i] << '\n';
  }
}

Outcome determinism(const Settings& s) {
  testing_support::TempDir dir("acceptance_det");
  auto train = [&](const std::string& file, const std::string& dep, const std::string& extra, const std::string& tag) {
    const auto prefix = dir.file(tag);
    const int code = run(quote(s.cli) + " --file " + quote(file) + " --depvarname " + dep +
                             " --ntree 200 --seed 11 --write --outprefix " + quote(prefix) + " " + extra,
                         dir.file(tag + ".out"), dir.file(tag + ".err"));
    return code == 0 ? slurp(prefix + ".forest") : std::string();
  };
  const auto one = train(s.iris, "Species", "--nthreads 1", "w1");
  const auto eight = train(s.iris, "Species", "--nthreads 8", "w8");
  const bool workers_ok = !one.empty() && one == eight;

  SimSpec spec;
  spec.n = 400;
  spec.p = 30;
  spec.seed = 5;
  const auto sample = simulate_snp_genotypes(spec);
  const auto csv = dir.file("snp.csv");
  write_snp_csv(sample, csv);
  const auto dense_cli = train(csv, "y", "--memorymode 0", "dense");
  const auto packed_cli = train(csv, "y", "--memorymode 2", "packed");
  const bool cli_pack_ok = !dense_cli.empty() && dense_cli == packed_cli;

  GrowConfig c;
  c.num_trees = 100;
  c.seed = 3;
  c.worker_count = 1;
  const auto dense = serialize_forest(grow_forest(to_dataset(sample, false), c));
  c.memory_mode = MemoryMode::Gwas;
  c.worker_count = 8;
  const auto packed = serialize_forest(grow_forest(to_dataset(sample, true), c));
  const bool lib_ok = dense == packed;

  return {workers_ok && cli_pack_ok && lib_ok,
          std::string("CLI .forest 1 vs 8 workers ") + (workers_ok ? "identical" : "differ") + " (" +
              std::to_string(one.size()) + " bytes); CLI dense vs packed " + (cli_pack_ok ? "identical" : "differ") +
              "; library dense/1 worker vs packed/8 workers " + (lib_ok ? "identical" : "differ")};
}

Outcome tree_scaling(const Settings&) {
  BenchConfig config;
  config.axis = BenchAxis::NumTrees;
  config.grid = {100, 200};
  config.n = 1000;
  config.p = 1000;
  config.repeats = 5;
  config.measure_memory = false;
  config.worker_count = 1;
  const auto report = run_scaling_benchmark(config);
  const double a = median(report.points[0].seconds);
  const double b = median(report.points[1].seconds);
  const double ratio = b / a;
  return {ratio >= 1.6 && ratio <= 2.4, "median " + fmt(a, 3) + " s at 100 trees, " + fmt(b, 3) +
                                            " s at 200 trees, ratio " + fmt(ratio, 3)};
}

Outcome memory_ordering(const Settings&) {
  std::map<MemoryMode, std::uint64_t> peak;
  std::string failure;
  for (auto mode : {MemoryMode::RuntimeOptimized, MemoryMode::MemoryEfficient, MemoryMode::Gwas}) {
    BenchConfig config;
    config.axis = BenchAxis::NumTrees;
    config.grid = {10};
    config.n = 2000;
    config.p = 5000;
    config.memory_mode = mode;
    config.worker_count = 1;
    const auto report = run_scaling_benchmark(config);
    const auto& point = report.points[0];
    if (!point.peak_bytes) {
      failure = point.error;
      break;
    }
    peak[mode] = *point.peak_bytes;
  }
  if (!failure.empty()) return {false, "measurement unavailable: " + failure};
  const auto mb = [](std::uint64_t b) { return fmt(static_cast<double>(b) / (1 << 20), 1) + " MiB"; };
  const bool ok = peak[MemoryMode::Gwas] < peak[MemoryMode::MemoryEfficient] &&
                  peak[MemoryMode::MemoryEfficient] <= peak[MemoryMode::RuntimeOptimized];
  return {ok, "peak above baseline: gwas " + mb(peak[MemoryMode::Gwas]) + ", memory-efficient " +
                  mb(peak[MemoryMode::MemoryEfficient]) + ", runtime-optimized " +
                  mb(peak[MemoryMode::RuntimeOptimized])};
}

Outcome survival_sanity(const Settings&) {
  std::mt19937_64 gen(31337);
  std::size_t mismatches = 0, absent = 0;
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> lt, rt;
    std::vector<std::uint8_t> ls, rs;
    std::vector<oracle::Member> lm, rm;
    const int nl = 1 + static_cast<int>(gen() % 10), nr = 1 + static_cast<int>(gen() % 10);
    for (int i = 0; i < nl + nr; ++i) {
      const double t = static_cast<double>(1 + gen() % 8);
      const bool event = gen() % 3 != 0;
      auto& times = i < nl ? lt : rt;
      auto& status = i < nl ? ls : rs;
      times.push_back(t);
      status.push_back(event);
      (i < nl ? lm : rm).push_back({t, event});
    }
    const auto got = logrank_statistic(lt, ls, rt, rs);
    const auto want = oracle::logrank(lm, rm);
    if (got.has_value() != want.has_value()) {
      ++mismatches;
      continue;
    }
    if (!got) {
      ++absent;
      continue;
    }
    const double err = std::abs(*got - *want) / std::max(1.0, *want);
    worst = std::max(worst, err);
    if (err > 1e-9) ++mismatches;
  }

  const std::vector<double> t{1, 2, 3, 4, 5};
  const std::vector<std::uint8_t> st{1, 1, 1, 1, 1};
  const bool perfect = c_index(t, st, std::vector<double>{5, 4, 3, 2, 1}) == 1.0;
  const bool reversed = c_index(t, st, std::vector<double>{1, 2, 3, 4, 5}) == 0.0;
  bool complement = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 30;
    std::vector<double> time(n), risk(n), neg(n);
    std::vector<std::uint8_t> status(n);
    for (std::size_t i = 0; i < n; ++i) {
      time[i] = static_cast<double>(i + 1);
      risk[i] = static_cast<double>(gen() % 1000003) + static_cast<double>(i) * 1e-6;
      neg[i] = -risk[i];
      status[i] = gen() % 2;
    }
    status[0] = 1;
    complement = complement && c_index(time, status, risk) + c_index(time, status, neg) == 1.0;
  }

  const auto toy = testing_support::survival_toy(400, 5, 21);
  GrowConfig c;
  c.tree_type = TreeType::Survival;
  c.num_trees = 300;
  c.seed = 2;
  const double oob = oob_error(grow_forest(toy, c), toy).error;

  const bool ok = mismatches == 0 && perfect && reversed && complement && oob < 0.45;
  return {ok, "log-rank mismatches " + std::to_string(mismatches) + "/1000 (worst relative error " +
                  sci(worst) + ", " + std::to_string(absent) + " absent in both); c_index perfect " +
                  (perfect ? "1" : "!=1") + ", reversed " + (reversed ? "0" : "!=0") + ", complement " +
                  (complement ? "exact" : "inexact") + "; toy OOB 1-C " + fmt(oob)};
}

Outcome cli_round_trip(const Settings& s) {
  testing_support::TempDir dir("acceptance_cli");
  const auto text = slurp(s.iris);
  std::istringstream lines(text);
  std::string header, line;
  std::getline(lines, header);
  std::ofstream train_out(dir.file("train.csv")), test_out(dir.file("test.csv"));
  train_out << header << '\n';
  test_out << header << '\n';
  std::size_t test_rows = 0, index = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (index++ % 3 == 0) {
      test_out << line << '\n';
      ++test_rows;
    } else {
      train_out << line << '\n';
    }
  }
  train_out.close();
  test_out.close();

  const auto cli = quote(s.cli);
  const int train_code = run(cli + " --file " + quote(dir.file("train.csv")) +
                                 " --depvarname Species --treetype 1 --ntree 500 --write --outprefix " +
                                 quote(dir.file("model")),
                             dir.file("train.out"), dir.file("train.err"));
  const auto predict_cmd = [&](const std::string& forest) {
    return cli + " --file " + quote(dir.file("test.csv")) + " --predict " + quote(forest) + " --outprefix " +
           quote(dir.file("pred"));
  };
  const int predict_code = run(predict_cmd(dir.file("model.forest")), dir.file("pred.out"), dir.file("pred.err"));

  std::size_t predicted_rows = 0;
  {
    std::ifstream in(dir.file("pred.prediction"));
    while (std::getline(in, line)) predicted_rows += !line.empty();
  }

  auto bytes = slurp(dir.file("model.forest"));
  bool corrupt_ok = false;
  int corrupt_code = -1;
  if (!bytes.empty()) {
    bytes[bytes.size() / 2] ^= 0x10;
    std::ofstream(dir.file("corrupt.forest"), std::ios::binary) << bytes;
    corrupt_code = run(predict_cmd(dir.file("corrupt.forest")), dir.file("bad.out"), dir.file("bad.err"));
    corrupt_ok = corrupt_code == 3 && slurp(dir.file("bad.err")).find("checksum") != std::string::npos;
  }

  const bool ok = train_code == 0 && predict_code == 0 && predicted_rows == test_rows && corrupt_ok;
  return {ok, "train exit " + std::to_string(train_code) + ", predict exit " + std::to_string(predict_code) + ", " +
                  std::to_string(predicted_rows) + " predictions for " + std::to_string(test_rows) +
                  " test rows; corrupted forest exit " + std::to_string(corrupt_code) +
                  (corrupt_ok ? " with checksum error" : "")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Settings&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  Settings settings;
  std::vector<int> only;
  CLI::App app{"grove acceptance checks"};
  app.add_option("--cli", settings.cli, "grove executable")->required();
  app.add_option("--iris", settings.iris, "iris.csv")->required();
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "iris OOB error", iris_oob},
      {2, "iris permutation importance", iris_importance},
      {3, "split algorithm equivalence", split_equivalence},
      {4, "validation protocol agreement", validation_agreement},
      {5, "importance validity", importance_validity},
      {6, "sampler uniformity", sampler_uniformity},
      {7, "determinism and packing", determinism},
      {8, "linear tree scaling", tree_scaling},
      {9, "memory mode ordering", memory_ordering},
      {10, "survival sanity", survival_sanity},
      {11, "CLI protocol", cli_round_trip},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), criterion.id) == only.end()) continue;
    Outcome outcome;
    try {
      outcome = criterion.check(settings);
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << criterion.id << " (" << criterion.name
              << "): " << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
