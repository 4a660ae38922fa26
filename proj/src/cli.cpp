#include "grove/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "grove/error.h"
#include "grove/evaluation.h"
#include "grove/forest.h"
#include "grove/io.h"
#include "grove/simbench.h"

namespace grove {

namespace {

ResponseKind response_kind_for(TreeType type) {
  switch (type) {
    case TreeType::Classification:
    case TreeType::Probability:
      return ResponseKind::Classification;
    case TreeType::Regression:
      return ResponseKind::Regression;
    case TreeType::Survival:
      return ResponseKind::Survival;
  }
  return ResponseKind::None;
}

TreeType parse_treetype(int code) {
  const auto type = tree_type_from_code(code);
  if (!type) {
    throw UsageError("unknown tree type " + std::to_string(code) + " (expected 1, 3, 5 or 9)");
  }
  return *type;
}

MemoryMode parse_memorymode(int code) {
  switch (code) {
    case 0:
      return MemoryMode::RuntimeOptimized;
    case 1:
      return MemoryMode::MemoryEfficient;
    case 2:
      return MemoryMode::Gwas;
    default:
      throw UsageError("unknown memory mode " + std::to_string(code) + " (expected 0, 1 or 2)");
  }
}

ImportanceMode parse_impmeasure(int code) {
  if (code < 0 || code > 3) {
    throw UsageError("unknown importance measure " + std::to_string(code) + " (expected 0 to 3)");
  }
  return static_cast<ImportanceMode>(code);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError("cannot write '" + path + "'");
  }
  return out;
}

void summary_line(std::ostream& out, const std::string& label, const std::string& value) {
  constexpr std::size_t kWidth = 34;
  std::string padded = label + ":";
  padded.resize(std::max(kWidth, padded.size() + 1), ' ');
  out << padded << value << '\n';
}

std::string percent(double fraction) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f %%", 100.0 * fraction);
  return buffer;
}

void write_confusion(const std::string& path, const ForestModel& forest, const Dataset& data,
                     const OobSummary& oob) {
  std::vector<std::uint32_t> truth;
  std::vector<std::uint32_t> predicted;
  const auto& labels = data.classification().labels;
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    if (!oob.has_prediction(i)) continue;
    truth.push_back(labels[i]);
    predicted.push_back(static_cast<std::uint32_t>(oob.predictions.row(i)[0]));
  }
  const auto matrix = confusion_matrix(truth, predicted, forest.classes.size());
  auto out = open_output(path);
  out << "true/predicted";
  for (const auto& name : forest.classes) out << '\t' << name;
  out << '\n';
  for (std::size_t c = 0; c < forest.classes.size(); ++c) {
    out << forest.classes[c];
    for (auto count : matrix[c]) out << '\t' << count;
    out << '\n';
  }
}

}  // namespace

int run_train(const CliConfig& cli, std::ostream& out) {
  const auto type = parse_treetype(cli.treetype);
  if (type == TreeType::Survival && cli.statusvarname.empty()) {
    throw UsageError("survival forests (--treetype 5) need --statusvarname");
  }
  if (type != TreeType::Survival && !cli.statusvarname.empty()) {
    throw UsageError("--statusvarname is only valid with --treetype 5");
  }
  GrowConfig config;
  config.tree_type = type;
  config.memory_mode = parse_memorymode(cli.memorymode);
  config.importance_mode = parse_impmeasure(cli.impmeasure);
  if (cli.ntree) {
    if (*cli.ntree == 0) throw UsageError("--ntree must be at least 1");
    config.num_trees = *cli.ntree;
  }
  if (cli.mtry) {
    if (*cli.mtry == 0) throw UsageError("--mtry must be at least 1");
    config.mtry = *cli.mtry;
  }
  if (cli.targetpartitionsize) {
    if (*cli.targetpartitionsize == 0) throw UsageError("--targetpartitionsize must be at least 1");
    config.min_node_size = *cli.targetpartitionsize;
  }
  if (cli.seed) config.seed = *cli.seed;
  if (cli.nthreads) config.worker_count = *cli.nthreads;

  if (cli.verbose) out << "Loading data from '" << cli.file << "'\n";
  auto columns = parse_dataset_file(cli.file);
  Dataset data = build_dataset(std::move(columns), ResponseSpec{response_kind_for(type), cli.depvarname,
                                                               cli.statusvarname});
  if (config.memory_mode == MemoryMode::Gwas) {
    data = data.with_packed_genotypes();
  }
  if (cli.verbose) out << "Growing trees\n";
  const auto forest = grow_forest(data, config);

  std::optional<OobSummary> oob;
  try {
    oob = oob_error(forest, data);
  } catch (const NoOobDataError&) {
  }

  std::string error_text = "unavailable";
  if (oob) {
    error_text = type == TreeType::Classification ? percent(oob->error) : format_number(oob->error);
  }
  summary_line(out, "Type", to_string(type));
  summary_line(out, "Number of trees", std::to_string(forest.num_trees()));
  summary_line(out, "Sample size", std::to_string(data.num_samples()));
  summary_line(out, "Number of independent variables", std::to_string(data.num_features()));
  summary_line(out, "Mtry", std::to_string(forest.config.mtry));
  summary_line(out, "Target node size", std::to_string(forest.config.min_node_size));
  summary_line(out, "Variable importance mode", to_string(forest.config.importance_mode));
  summary_line(out, "OOB prediction error", error_text);

  if (type == TreeType::Classification && oob) {
    write_confusion(cli.outprefix + ".confusion", forest, data, *oob);
  }
  if (forest.config.importance_mode != ImportanceMode::None) {
    const auto report = compute_importance(forest, data);
    auto file = open_output(cli.outprefix + ".importance");
    for (std::size_t j = 0; j < report.values.size(); ++j) {
      file << report.feature_names[j] << '\t' << format_number(report.values[j]) << '\n';
    }
  }
  if (cli.write) {
    save_forest(forest, cli.outprefix + ".forest");
    if (cli.verbose) out << "Saved forest to '" << cli.outprefix << ".forest'\n";
  }
  return kExitOk;
}

int run_predict(const CliConfig& cli, std::ostream& out) {
  const auto forest = load_forest(cli.predict);
  if (cli.verbose) out << "Loaded forest with " << forest.num_trees() << " trees\n";

  auto columns = parse_dataset_file(cli.file);
  std::vector<NamedColumn> features;
  std::vector<std::string> missing;
  for (const auto& name : forest.feature_names) {
    const auto it = std::find_if(columns.begin(), columns.end(), [&](const auto& c) { return c.name == name; });
    if (it == columns.end()) {
      missing.push_back(name);
    } else {
      features.push_back(std::move(*it));
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& name : missing) list += (list.empty() ? "" : ", ") + name;
    throw DataError("prediction data is missing features: " + list);
  }
  const Dataset data = build_dataset(std::move(features), ResponseSpec{});
  const std::uint32_t workers = cli.nthreads.value_or(0);
  const auto predictions = predict_forest(forest, data, workers);

  auto file = open_output(cli.outprefix + ".prediction");
  switch (forest.tree_type()) {
    case TreeType::Classification:
      for (std::size_t i = 0; i < predictions.num_rows; ++i) {
        file << forest.classes[static_cast<std::size_t>(predictions.row(i)[0])] << '\n';
      }
      break;
    case TreeType::Regression:
      for (std::size_t i = 0; i < predictions.num_rows; ++i) {
        file << format_number(predictions.row(i)[0]) << '\n';
      }
      break;
    case TreeType::Probability:
    case TreeType::Survival: {
      const bool survival = forest.tree_type() == TreeType::Survival;
      const std::size_t width = predictions.width;
      for (std::size_t k = 0; k < width; ++k) {
        file << (k ? "\t" : "") << (survival ? format_number(forest.timepoints[k]) : forest.classes[k]);
      }
      file << '\n';
      for (std::size_t i = 0; i < predictions.num_rows; ++i) {
        const auto row = predictions.row(i);
        for (std::size_t k = 0; k < width; ++k) {
          file << (k ? "\t" : "") << format_number(row[k]);
        }
        file << '\n';
      }
      break;
    }
  }
  if (cli.verbose) {
    out << "Wrote " << predictions.num_rows << " predictions to '" << cli.outprefix << ".prediction'\n";
  }
  return kExitOk;
}

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    err << "Error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ForestFileError& e) {
    err << "Error: " << e.what() << '\n';
    return kExitForestFile;
  } catch (const std::exception& e) {
    err << "Error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

int run_cli(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cli.file.empty()) {
      throw UsageError("--file is required");
    }
    if (!cli.predict.empty()) {
      if (!cli.depvarname.empty()) {
        throw UsageError("--depvarname and --predict are mutually exclusive");
      }
      return run_predict(cli, out);
    }
    if (cli.depvarname.empty()) {
      throw UsageError("training needs --depvarname (or pass --predict with a forest file)");
    }
    return run_train(cli, out);
  });
}

namespace {

struct BenchArgs {
  std::string axis = "trees";
  std::vector<double> grid;
  BenchConfig config;
  int treetype = 1;
  int memorymode = 0;
  bool no_memory = false;
  std::string outprefix = "grove_bench";
};

struct ValidateArgs {
  std::size_t datasets = 20;
  SimSpec spec;
  GrowConfig grow;
  std::string reference = "naive";
  std::string outprefix = "grove_validate";
};

int run_bench(BenchArgs& args, std::ostream& out) {
  const auto axis = bench_axis_from_string(args.axis);
  if (!axis) {
    throw UsageError("unknown benchmark axis '" + args.axis + "' (expected trees, features, samples or mtry)");
  }
  auto config = args.config;
  config.axis = *axis;
  config.grid = args.grid;
  config.tree_type = parse_treetype(args.treetype);
  config.memory_mode = parse_memorymode(args.memorymode);
  config.measure_memory = !args.no_memory;
  const auto report = run_scaling_benchmark(config);
  write_bench_report(report, out);
  auto summary = open_output(args.outprefix + ".tsv");
  write_bench_report(report, summary);
  auto samples = open_output(args.outprefix + ".samples.tsv");
  write_bench_samples(report, samples);
  return kExitOk;
}

int run_validate(ValidateArgs& args, std::ostream& out) {
  validate(args.spec);
  args.grow.tree_type = args.spec.endpoint == Endpoint::Dichotomous ? TreeType::Classification : TreeType::Regression;
  ReferenceModel reference;
  if (args.reference == "naive") {
    reference = naive_reference(args.grow);
  } else if (args.reference == "engine") {
    reference = engine_reference(args.grow);
  } else {
    throw UsageError("unknown reference '" + args.reference + "' (expected naive or engine)");
  }
  const auto report = run_validation_protocol(args.datasets, args.spec, args.grow, reference);
  auto file = open_output(args.outprefix + ".agreement.tsv");
  write_agreement_report(report, file);
  out << "datasets: " << report.rows.size() << '\n'
      << "mean difference: " << format_number(report.mean_difference) << '\n'
      << "limits of agreement: [" << format_number(report.lower_limit) << ", " << format_number(report.upper_limit)
      << "]\n"
      << "all within limits: " << (report.all_within_limits() ? "yes" : "no") << '\n';
  return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"grove: random forests for classification, regression, probability estimation and survival"};
  app.footer(
      "Tree types: 1 classification, 3 regression, 5 survival (needs --statusvarname), 9 probability.\n"
      "Importance: 0 none, 1 impurity, 2 permutation, 3 scaled permutation.\n"
      "Memory modes: 0 runtime-optimized, 1 memory-efficient, 2 GWAS (packed 0/1/2 genotypes).\n"
      "Exit codes: 0 success, 1 usage error, 2 data error, 3 forest file error.");

  CliConfig cli;
  app.add_option("--file", cli.file, "Data file with a header line (comma or whitespace delimited)");
  app.add_option("--depvarname", cli.depvarname, "Dependent variable (survival: time variable)");
  app.add_option("--statusvarname", cli.statusvarname, "Survival status variable (0 censored, 1 event)");
  app.add_option("--treetype", cli.treetype, "Tree type code");
  app.add_option("--ntree", cli.ntree, "Number of trees (default 500)");
  app.add_option("--mtry", cli.mtry, "Features tried per split (default floor(sqrt(p)))");
  app.add_option("--targetpartitionsize", cli.targetpartitionsize, "Minimal node size to split");
  app.add_option("--impmeasure", cli.impmeasure, "Variable importance measure");
  app.add_option("--memorymode", cli.memorymode, "Memory mode");
  app.add_flag("--write", cli.write, "Save the forest to <outprefix>.forest");
  app.add_option("--predict", cli.predict, "Forest file to predict --file with");
  app.add_option("--seed", cli.seed, "Random seed (default 0)");
  app.add_option("--nthreads", cli.nthreads, "Worker threads (default: all cores)");
  app.add_flag("--verbose", cli.verbose, "Print progress messages");
  app.add_option("--outprefix", cli.outprefix, "Prefix of output files")->capture_default_str();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Runtime and peak memory scaling on simulated SNP data");
  bench_cmd->add_option("--axis", bench.axis, "trees, features, samples or mtry")->capture_default_str();
  bench_cmd->add_option("--grid", bench.grid, "Axis values, ascending")->delimiter(',')->required();
  bench_cmd->add_option("--n", bench.config.n, "Samples")->capture_default_str();
  bench_cmd->add_option("--p", bench.config.p, "SNPs")->capture_default_str();
  bench_cmd->add_option("--ntree", bench.config.num_trees, "Trees")->capture_default_str();
  bench_cmd->add_option("--mtry-percent", bench.config.mtry_percent, "mtry as percent of p (0: sqrt(p))");
  bench_cmd->add_option("--treetype", bench.treetype, "1 or 3")->capture_default_str();
  bench_cmd->add_option("--memorymode", bench.memorymode, "0, 1 or 2")->capture_default_str();
  bench_cmd->add_option("--repeats", bench.config.repeats, "Runs per grid value")->capture_default_str();
  bench_cmd->add_option("--seed", bench.config.seed, "Seed")->capture_default_str();
  bench_cmd->add_option("--nthreads", bench.config.worker_count, "Worker threads (0: all cores)");
  bench_cmd->add_flag("--no-memory", bench.no_memory, "Skip forked peak memory measurement");
  bench_cmd->add_option("--outprefix", bench.outprefix, "Report prefix")->capture_default_str();

  ValidateArgs val;
  auto* validate_cmd = app.add_subcommand("validate", "OOB error agreement against a reference forest");
  validate_cmd->add_option("--datasets", val.datasets, "Simulated datasets")->capture_default_str();
  validate_cmd->add_option("--n", val.spec.n, "Samples")->capture_default_str();
  validate_cmd->add_option("--p", val.spec.p, "SNPs")->capture_default_str();
  validate_cmd->add_option("--effects", val.spec.n_effect, "Effect SNPs")->capture_default_str();
  validate_cmd->add_option("--beta", val.spec.effect_size, "Effect size")->capture_default_str();
  validate_cmd->add_option("--maf-low", val.spec.maf_low, "Lowest MAF")->capture_default_str();
  validate_cmd->add_option("--maf-high", val.spec.maf_high, "Highest MAF")->capture_default_str();
  bool continuous = false;
  validate_cmd->add_flag("--continuous", continuous, "Continuous instead of dichotomous endpoint");
  validate_cmd->add_option("--ntree", val.grow.num_trees, "Trees")->capture_default_str();
  validate_cmd->add_option("--mtry", val.grow.mtry, "mtry (0: sqrt(p))");
  validate_cmd->add_option("--seed", val.spec.seed, "Seed")->capture_default_str();
  validate_cmd->add_option("--nthreads", val.grow.worker_count, "Worker threads (0: all cores)");
  validate_cmd->add_option("--reference", val.reference, "naive or engine")->capture_default_str();
  validate_cmd->add_option("--outprefix", val.outprefix, "Report prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*bench_cmd) {
    return guarded(err, [&] { return run_bench(bench, out); });
  }
  if (*validate_cmd) {
    val.spec.endpoint = continuous ? Endpoint::Continuous : Endpoint::Dichotomous;
    val.grow.seed = val.spec.seed;
    return guarded(err, [&] { return run_validate(val, out); });
  }
  return run_cli(cli, out, err);
}

}  // namespace grove
