#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svg.hpp"

namespace iqnet::cli {

namespace fs = std::filesystem;

fs::path trial_dir(const fs::path& run, const std::string& model, std::size_t trial) {
  return run / model / ("trial_" + std::to_string(trial));
}

RunData load_run(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw InputError("run directory " + run_dir.string() + " does not exist");
  RunData run;
  std::vector<fs::path> model_dirs;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_directory()) model_dirs.push_back(e.path());
  }
  std::sort(model_dirs.begin(), model_dirs.end());
  for (const auto& md : model_dirs) {
    std::vector<fs::path> trials;
    for (const auto& e : fs::directory_iterator(md)) {
      if (e.is_directory() && e.path().filename().string().rfind("trial_", 0) == 0 &&
          fs::exists(e.path() / "DONE")) {
        trials.push_back(e.path());
      }
    }
    std::sort(trials.begin(), trials.end());
    for (const auto& td : trials) {
      for (auto& rec : read_trial_records(td / "overall.csv", td / "per_snr.csv")) {
        if (!run.trials.count(rec.model)) run.models.push_back(rec.model);
        run.trials[rec.model].push_back(std::move(rec));
      }
    }
  }
  if (run.models.empty()) throw InputError("no completed trials under " + run_dir.string());
  for (auto& [model, recs] : run.trials) {
    std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
  }

  const auto speed_path = run_dir / "speed.csv";
  if (fs::exists(speed_path)) {
    const auto t = read_csv(speed_path);
    if (t.header != kSpeedColumns) throw FormatError(speed_path.string() + ": unexpected columns");
    for (const auto& row : t.rows) {
      SpeedReport r;
      r.model = row[0];
      r.batch = parse_count(row[1]);
      r.reps = parse_count(row[2]);
      r.mean_us = parse_real(row[3]);
      r.median_us = parse_real(row[4]);
      r.min_us = parse_real(row[5]);
      r.normalized = parse_real(row[6]);
      run.speed.push_back(r);
    }
  }
  return run;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MeanStd summarize(const std::vector<double>& v) {
  if (v.size() >= 2) return mean_std(v);
  return {v.front(), kNaN};
}

}  // namespace

ReportTables build_report(const RunData& run, std::string_view baseline, TTestKind kind) {
  ReportTables out;
  out.accuracy_vs_snr.header = {"model", "snr_db", "mean", "std", "trials"};
  out.overall.header = {"model", "mean", "std", "trials"};
  out.pvalues.header = {"model_a", "model_b", "t", "p", "df"};
  out.params_vs_accuracy.header = {"model", "params", "mean", "std"};
  out.speed_vs_accuracy.header = {"model", "us_per_sample", "normalized", "mean", "source"};

  std::map<std::string, std::vector<double>> accuracies;
  std::map<std::string, double> speed;
  std::string speed_source = run.speed.empty() ? "eval" : "bench";
  for (const auto& model : run.models) {
    const auto& recs = run.trials.at(model);
    std::map<int, std::vector<double>> per_snr;
    std::vector<double> acc;
    double us = 0;
    for (const auto& r : recs) {
      acc.push_back(r.accuracy);
      us += r.us_per_sample;
      for (const auto& [s, a] : r.per_snr) per_snr[s].push_back(a);
    }
    for (const auto& [s, values] : per_snr) {
      if (values.size() != recs.size()) {
        throw InputError(model + ": SNR " + std::to_string(s) + " missing from some trials");
      }
      const auto ms = summarize(values);
      out.accuracy_vs_snr.rows.push_back(
          {model, std::to_string(s), format_real(ms.mean), format_real(ms.std), std::to_string(values.size())});
    }
    const auto ms = summarize(acc);
    out.overall.rows.push_back({model, format_real(ms.mean), format_real(ms.std), std::to_string(acc.size())});
    out.params_vs_accuracy.rows.push_back(
        {model, std::to_string(recs.front().params), format_real(ms.mean), format_real(ms.std)});
    accuracies[model] = acc;
    speed[model] = us / static_cast<double>(recs.size());
  }

  for (std::size_t i = 0; i < run.models.size(); ++i) {
    for (std::size_t j = i + 1; j < run.models.size(); ++j) {
      const auto& a = accuracies[run.models[i]];
      const auto& b = accuracies[run.models[j]];
      if (a.size() < 2 || b.size() < 2) continue;
      const auto t = ttest_unpaired(a, b, kind);
      out.pvalues.rows.push_back(
          {run.models[i], run.models[j], format_real(t.t), format_real(t.p), format_real(t.df)});
    }
  }

  if (!run.speed.empty()) {
    speed.clear();
    for (const auto& r : run.speed) speed[r.model] = r.median_us;
  }
  const auto base = speed.find(std::string(baseline));
  for (const auto& model : run.models) {
    const auto it = speed.find(model);
    const double us = it == speed.end() ? kNaN : it->second;
    const double norm = base == speed.end() ? kNaN : us / base->second;
    out.speed_vs_accuracy.rows.push_back(
        {model, format_real(us), format_real(norm), format_real(summarize(accuracies[model]).mean), speed_source});
  }
  return out;
}

void write_report(const fs::path& dir, const ReportTables& t, bool svg) {
  write_csv(dir / kFig3File, t.accuracy_vs_snr);
  write_csv(dir / kFig4File, t.overall);
  write_csv(dir / kFig4PFile, t.pvalues);
  write_csv(dir / kFig5File, t.params_vs_accuracy);
  write_csv(dir / kFig6File, t.speed_vs_accuracy);
  if (!svg) return;

  std::map<std::string, Series> curves;
  std::vector<std::string> order;
  for (const auto& row : t.accuracy_vs_snr.rows) {
    if (!curves.count(row[0])) order.push_back(row[0]);
    auto& s = curves[row[0]];
    s.label = row[0];
    s.points.push_back({parse_real(row[1]), parse_real(row[2]), parse_real(row[3])});
  }
  std::vector<Series> lines;
  for (const auto& m : order) lines.push_back(curves[m]);
  write_svg(dir / "fig3_accuracy_vs_snr.svg", line_chart("Accuracy vs SNR", "SNR (dB)", "accuracy", lines));

  std::vector<Bar> bars;
  for (const auto& row : t.overall.rows) bars.push_back({row[0], parse_real(row[1]), parse_real(row[2])});
  write_svg(dir / "fig4_overall.svg", bar_chart("Overall accuracy", "accuracy", bars));

  std::vector<Series> params;
  for (const auto& row : t.params_vs_accuracy.rows) {
    params.push_back({row[0], {{parse_real(row[1]) / 1e6, parse_real(row[2]), parse_real(row[3])}}});
  }
  write_svg(dir / "fig5_params_vs_accuracy.svg",
            scatter_chart("Parameters vs accuracy", "parameters (millions)", "accuracy", params));

  std::vector<Series> speed;
  for (const auto& row : t.speed_vs_accuracy.rows) {
    const double norm = parse_real(row[2]);
    if (std::isfinite(norm)) speed.push_back({row[0], {{norm, parse_real(row[3]), kNaN}}});
  }
  write_svg(dir / "fig6_speed_vs_accuracy.svg",
            scatter_chart("Normalized inference time vs accuracy", "normalized time per sample", "accuracy", speed));
}

}  // namespace iqnet::cli
