#include "iqnet/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace iqnet {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable table_with(const std::vector<std::string>& header) {
  CsvTable t;
  t.header = header;
  return t;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV: missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  CsvTable t;
  bool first = has_header;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (has_header && cells.size() != t.header.size()) {
      throw FormatError(path.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (has_header && t.header.empty()) throw FormatError(path.string() + ": empty CSV file");
  return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n") != std::string::npos) {
        throw FormatError("CSV cell contains a separator: " + cells[i]);
      }
      out << (i ? "," : "") << cells[i];
    }
    out << '\n';
  };
  if (!table.header.empty()) emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw Error("write failed for " + path.string());
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("not a count: '" + std::string(text) + "'");
  }
  return v;
}

void write_per_snr_csv(const std::filesystem::path& path, std::span<const TrialRecord> trials) {
  auto t = table_with(kPerSnrColumns);
  for (const auto& r : trials) {
    for (const auto& [snr, acc] : r.per_snr) {
      t.rows.push_back({r.model, std::to_string(r.trial), std::to_string(snr), format_real(acc)});
    }
  }
  write_csv(path, t);
}

void write_overall_csv(const std::filesystem::path& path, std::span<const TrialRecord> trials) {
  auto t = table_with(kOverallColumns);
  for (const auto& r : trials) {
    t.rows.push_back({r.model, std::to_string(r.trial), format_real(r.accuracy), std::to_string(r.params),
                      format_real(r.us_per_sample)});
  }
  write_csv(path, t);
}

void write_confusion_csv(const std::filesystem::path& path, const RunReport& report) {
  CsvTable t;
  for (const auto& row : report.confusion) {
    std::vector<std::string> cells;
    for (auto c : row) cells.push_back(std::to_string(c));
    t.rows.push_back(std::move(cells));
  }
  write_csv(path, t);
}

void write_loss_csv(const std::filesystem::path& path, const TrainHistory& history) {
  auto t = table_with(kLossColumns);
  for (const auto& e : history.epochs) {
    t.rows.push_back({std::to_string(e.epoch), format_real(e.mean_loss), format_real(e.lr), format_real(e.seconds)});
  }
  write_csv(path, t);
}

void write_speed_csv(const std::filesystem::path& path, std::span<const SpeedReport> reports) {
  auto t = table_with(kSpeedColumns);
  for (const auto& r : reports) {
    t.rows.push_back({r.model, std::to_string(r.batch), std::to_string(r.reps), format_real(r.mean_us),
                      format_real(r.median_us), format_real(r.min_us), format_real(r.normalized)});
  }
  write_csv(path, t);
}

void write_params_csv(const std::filesystem::path& path, std::span<const ParamProfile> rows) {
  auto t = table_with(kParamsColumns);
  for (const auto& r : rows) t.rows.push_back({r.model, std::to_string(r.params), format_real(r.ratio)});
  write_csv(path, t);
}

std::vector<TrialRecord> read_trial_records(const std::filesystem::path& overall_csv,
                                            const std::filesystem::path& per_snr_csv) {
  const auto overall = read_csv(overall_csv);
  if (overall.header != kOverallColumns) throw FormatError(overall_csv.string() + ": unexpected columns");
  const auto snr = read_csv(per_snr_csv);
  if (snr.header != kPerSnrColumns) throw FormatError(per_snr_csv.string() + ": unexpected columns");

  std::vector<TrialRecord> out;
  std::map<std::pair<std::string, std::size_t>, std::size_t> index;
  for (const auto& row : overall.rows) {
    TrialRecord r;
    r.model = row[0];
    r.trial = parse_count(row[1]);
    r.accuracy = parse_real(row[2]);
    r.params = parse_count(row[3]);
    r.us_per_sample = parse_real(row[4]);
    if (!index.emplace(std::make_pair(r.model, r.trial), out.size()).second) {
      throw FormatError(overall_csv.string() + ": duplicate row for " + r.model + " trial " + row[1]);
    }
    out.push_back(std::move(r));
  }
  for (const auto& row : snr.rows) {
    const auto it = index.find({row[0], parse_count(row[1])});
    if (it == index.end()) throw FormatError(per_snr_csv.string() + ": row without overall entry: " + row[0]);
    int s = 0;
    const auto [ptr, ec] = std::from_chars(row[2].data(), row[2].data() + row[2].size(), s);
    if (ec != std::errc() || ptr != row[2].data() + row[2].size()) throw FormatError("bad snr_db: " + row[2]);
    out[it->second].per_snr[s] = parse_real(row[3]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> read_confusion_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path, false);
  std::vector<std::vector<std::size_t>> m;
  for (const auto& row : t.rows) {
    if (row.size() != t.rows.size()) throw FormatError(path.string() + ": confusion matrix is not square");
    std::vector<std::size_t> counts;
    for (const auto& c : row) counts.push_back(parse_count(c));
    m.push_back(std::move(counts));
  }
  return m;
}

}  // namespace iqnet
