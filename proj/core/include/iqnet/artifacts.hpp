#pragma once

// CSV artifacts written by training, evaluation and benchmarking runs.
// Column layouts are fixed; reals use 17 significant digits so values
// survive a write/read cycle bit-exactly.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iqnet/bench.hpp"
#include "iqnet/stats.hpp"
#include "iqnet/train.hpp"

namespace iqnet {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws FormatError when missing.
  std::size_t column(std::string_view name) const;
};

/// Plain comma-separated values without quoting. `has_header` false reads
/// every line as a row.
CsvTable read_csv(const std::filesystem::path& path, bool has_header = true);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::string format_real(double v);
double parse_real(std::string_view text);
std::size_t parse_count(std::string_view text);

inline const std::vector<std::string> kPerSnrColumns{"model", "trial", "snr_db", "accuracy"};
inline const std::vector<std::string> kOverallColumns{"model", "trial", "accuracy", "params", "us_per_sample"};
inline const std::vector<std::string> kLossColumns{"epoch", "mean_loss", "lr", "seconds"};
inline const std::vector<std::string> kSpeedColumns{"model", "batch", "reps", "mean_us", "median_us", "min_us", "normalized"};
inline const std::vector<std::string> kParamsColumns{"model", "params", "ratio"};

void write_per_snr_csv(const std::filesystem::path& path, std::span<const TrialRecord> trials);
void write_overall_csv(const std::filesystem::path& path, std::span<const TrialRecord> trials);
/// K lines of K counts, row = true class, column = predicted class.
void write_confusion_csv(const std::filesystem::path& path, const RunReport& report);
void write_loss_csv(const std::filesystem::path& path, const TrainHistory& history);
void write_speed_csv(const std::filesystem::path& path, std::span<const SpeedReport> reports);
void write_params_csv(const std::filesystem::path& path, std::span<const ParamProfile> rows);

/// Joins overall.csv and per_snr.csv back into per-trial records, ordered as
/// the overall rows appear.
std::vector<TrialRecord> read_trial_records(const std::filesystem::path& overall_csv,
                                            const std::filesystem::path& per_snr_csv);

std::vector<std::vector<std::size_t>> read_confusion_csv(const std::filesystem::path& path);

}  // namespace iqnet
