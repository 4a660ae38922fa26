#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace grove {

struct CliConfig {
  std::string file;
  std::string depvarname;
  std::string statusvarname;
  int treetype = 1;
  std::optional<std::uint32_t> ntree;
  std::optional<std::uint32_t> mtry;
  std::optional<std::uint32_t> targetpartitionsize;
  int impmeasure = 0;
  int memorymode = 0;
  bool write = false;
  std::string predict;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> nthreads;
  bool verbose = false;
  std::string outprefix = "ranger_out";
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitForestFile = 3;

// Both throw UsageError, DataError or ForestFileError; exit_code_for maps them.
int run_train(const CliConfig& cli, std::ostream& out);
int run_predict(const CliConfig& cli, std::ostream& out);

// Dispatches on --predict, printing errors to err.
int run_cli(const CliConfig& cli, std::ostream& out, std::ostream& err);

// Full command line including the bench and validate subcommands.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace grove
