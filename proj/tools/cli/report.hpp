#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "iqnet/artifacts.hpp"

namespace iqnet::cli {

/// Completed trials of a run directory, grouped by model in first-seen order.
struct RunData {
  std::vector<std::string> models;
  std::map<std::string, std::vector<TrialRecord>> trials;
  std::vector<SpeedReport> speed;  // from speed.csv when the run was benchmarked
};

/// Per-trial directory: <run>/<model>/trial_<k>/ holding a DONE marker.
std::filesystem::path trial_dir(const std::filesystem::path& run, const std::string& model, std::size_t trial);

RunData load_run(const std::filesystem::path& run_dir);

struct ReportTables {
  CsvTable accuracy_vs_snr;   // model, snr_db, mean, std, trials
  CsvTable overall;           // model, mean, std, trials
  CsvTable pvalues;           // model_a, model_b, t, p, df
  CsvTable params_vs_accuracy;  // model, params, mean, std
  CsvTable speed_vs_accuracy;   // model, us_per_sample, normalized, mean, source
};

/// Models with a single trial get std "nan" and no p-value rows.
/// Speed uses speed.csv medians when present, else mean evaluation timing.
ReportTables build_report(const RunData& run, std::string_view baseline, TTestKind kind = TTestKind::kPooled);

inline constexpr const char* kFig3File = "fig3_accuracy_vs_snr.csv";
inline constexpr const char* kFig4File = "fig4_overall.csv";
inline constexpr const char* kFig4PFile = "fig4_pvalues.csv";
inline constexpr const char* kFig5File = "fig5_params_vs_accuracy.csv";
inline constexpr const char* kFig6File = "fig6_speed_vs_accuracy.csv";

void write_report(const std::filesystem::path& dir, const ReportTables& tables, bool svg);

}  // namespace iqnet::cli
