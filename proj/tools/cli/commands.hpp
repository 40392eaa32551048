#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace iqnet::cli {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags or configuration
  kExitData = 2,     // missing or malformed data, I/O failure
  kExitNumeric = 3,  // divergence or a failed numerical self-check
};

struct Options {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> weights;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::optional<Precision> precision;
  std::optional<std::size_t> trials;
  bool svg = false;
  bool welch = false;
  std::string inject_fault;  // selftest only: "complex-sign-flip"
};

/// Resolved experiment settings: the config file (or full-size defaults)
/// with command-line overrides applied.
ExperimentConfig resolve_config(const Options& opt);

int cmd_gen_data(const Options& opt, std::ostream& out);
int cmd_train(const Options& opt, std::ostream& out);
int cmd_eval(const Options& opt, std::ostream& out);
int cmd_bench(const Options& opt, std::ostream& out);
int cmd_report(const Options& opt, std::ostream& out);
int cmd_selftest(const Options& opt, std::ostream& out);
int cmd_convert_info(const Options& opt, std::ostream& out);

/// Parses argv, dispatches and maps exceptions onto exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Seeds derived for one trial; every model of a trial shares the split.
struct TrialSeeds {
  std::uint64_t split;
  std::uint64_t init;
  std::uint64_t train;
};
TrialSeeds trial_seeds(std::uint64_t master, std::size_t trial);

/// Order-sensitive hash of frame contents, used to audit splits.
std::uint64_t frames_hash(const IQDataset& ds);

}  // namespace iqnet::cli
