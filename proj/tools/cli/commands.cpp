#include "commands.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "iqnet/artifacts.hpp"
#include "iqnet/selfcheck.hpp"
#include "report.hpp"

namespace iqnet::cli {

namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v, int digits = 16) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%0*" PRIx64, digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
}

IQDataset load_data(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("dataset file " + path.string() + " does not exist");
  return load_dataset(path);
}

IQDataset subset(const IQDataset& ds, std::size_t limit) {
  if (limit == 0 || limit >= ds.size()) return ds;
  IQDataset out;
  out.class_names = ds.class_names;
  out.provenance = ds.provenance;
  out.frames.assign(ds.frames.begin(), ds.frames.begin() + static_cast<std::ptrdiff_t>(limit));
  return out;
}

template <typename T>
RunReport train_one(const ExperimentConfig& cfg, const ModelId& id, std::size_t trial, const IQDataset& train_set,
                     const IQDataset& test_set, const TrialSeeds& seeds, const fs::path& dir, std::ostream& out) {
  auto model = build<T>(id, train_set.num_classes(), seeds.init);
  auto tcfg = cfg.train;
  tcfg.seed = seeds.train;
  const auto history = train(model, train_set, tcfg, [&](const EpochStats& e) {
    out << "  " << id.name() << " trial " << trial << " epoch " << e.epoch + 1 << "/" << tcfg.epochs
        << " loss " << std::setprecision(5) << e.mean_loss << " (" << std::setprecision(3) << e.seconds << " s)\n"
        << std::flush;
  });
  auto report = evaluate(model, test_set, cfg.eval_batch);
  report.trial = trial;
  report.seed = seeds.train;
  for (const auto& e : history.epochs) {
    report.loss_curve.push_back(e.mean_loss);
    report.epoch_seconds.push_back(e.seconds);
  }
  save_weights(model, dir / "weights.iqnw");
  write_loss_csv(dir / "loss.csv", history);
  return report;
}

template <typename T>
SpeedReport bench_one(const ExperimentConfig& cfg, const ModelId& id, const IQDataset& test_set, const fs::path& run,
                      const TrialSeeds& seeds) {
  const auto weights = trial_dir(run, id.name(), 0) / "weights.iqnw";
  auto model = fs::exists(weights) ? load_weights<T>(weights) : build<T>(id, test_set.num_classes(), seeds.init);
  auto bcfg = cfg.bench;
  return measure_inference(model, test_set, bcfg);
}

SpeedReport bench_dispatch(const ExperimentConfig& cfg, const ModelId& id, const IQDataset& test_set,
                           const fs::path& run, const TrialSeeds& seeds) {
  return cfg.precision == Precision::kF32 ? bench_one<float>(cfg, id, test_set, run, seeds)
                                          : bench_one<double>(cfg, id, test_set, run, seeds);
}

}  // namespace

TrialSeeds trial_seeds(std::uint64_t master, std::size_t trial) {
  return {Rng::derive(master, {trial, 0x5B17}), Rng::derive(master, {trial, 0x1417}),
          Rng::derive(master, {trial, 0x7EA1})};
}

std::uint64_t frames_hash(const IQDataset& ds) {
  std::uint64_t h = Rng::mix(ds.frames.size());
  for (const auto& f : ds.frames) {
    h = Rng::mix(h ^ (static_cast<std::uint64_t>(f.label) << 8 | static_cast<std::uint8_t>(f.snr_db)));
    for (std::size_t i = 0; i < f.samples.size(); i += 2) {
      const std::uint64_t word = static_cast<std::uint64_t>(std::bit_cast<std::uint32_t>(f.samples[i])) << 32 |
                                 std::bit_cast<std::uint32_t>(f.samples[i + 1]);
      h = Rng::mix(h ^ word);
    }
  }
  return h;
}

ExperimentConfig resolve_config(const Options& opt) {
  auto cfg = opt.config ? ExperimentConfig::load(*opt.config) : default_config();
  if (opt.out) cfg.out = *opt.out;
  if (opt.data) cfg.data = *opt.data;
  if (opt.precision) cfg.precision = *opt.precision;
  if (opt.trials) {
    if (*opt.trials == 0) throw ConfigError("--trials must be positive");
    cfg.trials = *opt.trials;
  }
  if (opt.threads == 0) throw ConfigError("--threads must be positive");
  cfg.bench.threads = opt.threads;
  return cfg;
}

int cmd_gen_data(const Options& opt, std::ostream& out) {
  auto cfg = resolve_config(opt);
  if (opt.seed) cfg.dataset.seed = *opt.seed;
  const fs::path path = opt.out ? *opt.out : cfg.data;
  const auto ds = generate_dataset(cfg.dataset);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto crc = save_dataset(ds, path);
  out << "wrote " << ds.size() << " frames to " << path.string() << "\n";
  out << "classes " << ds.num_classes() << ":";
  for (std::size_t i = 0; i < ds.num_classes(); ++i) out << " " << i << "=" << ds.class_names[i];
  out << "\nsnr grid (dB):";
  for (int s : cfg.dataset.snrs_db) out << " " << s;
  out << "\ncrc32 " << hex(crc, 8) << "\n";
  return kExitOk;
}

int cmd_train(const Options& opt, std::ostream& out) {
  auto cfg = resolve_config(opt);
  if (opt.seed) cfg.train.seed = *opt.seed;
  const auto ds = load_data(cfg.data);
  const fs::path run = cfg.out;
  fs::create_directories(run);
  out << "dataset " << cfg.data.string() << ": " << ds.size() << " frames, " << ds.num_classes() << " classes\n";

  std::vector<TrialRecord> records;
  bool diverged = false;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const auto seeds = trial_seeds(cfg.train.seed, trial);
    const auto [train_set, test_set] = split_shuffle(ds, cfg.split_ratio, seeds.split);
    const auto split_hash = frames_hash(test_set);
    for (const auto& id : cfg.models) {
      const auto dir = trial_dir(run, id.name(), trial);
      if (fs::exists(dir / "DONE")) {
        out << id.name() << " trial " << trial << ": already complete, skipping\n";
        for (auto& r : read_trial_records(dir / "overall.csv", dir / "per_snr.csv")) records.push_back(std::move(r));
        continue;
      }
      fs::create_directories(dir);
      fs::remove(dir / "DIVERGED");
      try {
        const auto report = cfg.precision == Precision::kF32
                                ? train_one<float>(cfg, id, trial, train_set, test_set, seeds, dir, out)
                                : train_one<double>(cfg, id, trial, train_set, test_set, seeds, dir, out);
        const TrialRecord rec = to_record(report);
        write_per_snr_csv(dir / "per_snr.csv", std::span<const TrialRecord>(&rec, 1));
        write_overall_csv(dir / "overall.csv", std::span<const TrialRecord>(&rec, 1));
        write_confusion_csv(dir / "confusion.csv", report);
        write_text(dir / "meta.txt", "model=" + id.name() + "\ntrial=" + std::to_string(trial) +
                                         "\nprecision=" + precision_name(cfg.precision) +
                                         "\nsplit_seed=" + hex(seeds.split) + "\ninit_seed=" + hex(seeds.init) +
                                         "\ntrain_seed=" + hex(seeds.train) + "\ntest_split_hash=" +
                                         hex(split_hash) + "\ntrain_frames=" + std::to_string(train_set.size()) +
                                         "\ntest_frames=" + std::to_string(test_set.size()) + "\n");
        write_text(dir / "DONE", "");
        out << id.name() << " trial " << trial << ": accuracy " << std::setprecision(4)
            << rec.accuracy << "\n";
        records.push_back(rec);
      } catch (const DivergenceError& e) {
        diverged = true;
        write_text(dir / "DIVERGED", std::string(e.what()) + "\n");
        out << id.name() << " trial " << trial << ": " << e.what() << "\n";
      }
    }
  }

  // Run-level tables, model-major in configuration order.
  std::vector<TrialRecord> ordered;
  for (const auto& id : cfg.models) {
    for (const auto& r : records) {
      if (r.model == id.name()) ordered.push_back(r);
    }
  }
  write_overall_csv(run / "overall.csv", ordered);
  write_per_snr_csv(run / "per_snr.csv", ordered);
  out << "wrote " << (run / "overall.csv").string() << " (" << ordered.size() << " rows)\n";
  return diverged ? kExitNumeric : kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& out) {
  if (!opt.weights) throw ConfigError("eval needs --weights");
  auto cfg = resolve_config(opt);
  const auto ds = load_data(cfg.data);
  RunReport report;
  if (cfg.precision == Precision::kF32) {
    auto model = load_weights<float>(*opt.weights);
    report = evaluate(model, ds, cfg.eval_batch);
  } else {
    auto model = load_weights<double>(*opt.weights);
    report = evaluate(model, ds, cfg.eval_batch);
  }
  out << report.model << " on " << ds.size() << " frames: accuracy " << std::setprecision(4)
      << report.overall_accuracy() << "\n";
  for (const auto& [snr, b] : report.per_snr) {
    out << "  snr " << std::setw(4) << snr << " dB: " << std::setprecision(4) << b.accuracy() << " (" << b.total
        << " frames)\n";
  }
  if (opt.out) {
    const TrialRecord rec = to_record(report);
    write_per_snr_csv(*opt.out / "per_snr.csv", std::span<const TrialRecord>(&rec, 1));
    write_overall_csv(*opt.out / "overall.csv", std::span<const TrialRecord>(&rec, 1));
    write_confusion_csv(*opt.out / "confusion.csv", report);
  }
  return kExitOk;
}

int cmd_bench(const Options& opt, std::ostream& out) {
  auto cfg = resolve_config(opt);
  const auto ds = load_data(cfg.data);
  const fs::path run = cfg.out;
  fs::create_directories(run);
  const auto seeds = trial_seeds(opt.seed.value_or(cfg.train.seed), 0);
  const auto test_set = subset(split_shuffle(ds, cfg.split_ratio, seeds.split).second, cfg.bench_frames);

  std::vector<SpeedReport> reports;
  std::set<std::string> seen;
  for (const auto& id : cfg.models) {
    if (!seen.insert(id.name()).second) continue;
    reports.push_back(bench_dispatch(cfg, id, test_set, run, seeds));
    out << "  " << id.name() << ": median " << std::setprecision(4) << reports.back().median_us << " us/sample\n";
  }
  // The baseline is timed even when it is not one of the listed models.
  std::vector<SpeedReport> with_base = reports;
  if (!seen.count(cfg.baseline)) {
    with_base.push_back(bench_dispatch(cfg, ModelId::parse(cfg.baseline), test_set, run, seeds));
  }
  normalize_speeds(with_base, cfg.baseline);
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].normalized = with_base[i].normalized;

  write_speed_csv(run / "speed.csv", reports);
  double base_us = 0;
  for (const auto& r : with_base) {
    if (r.model == cfg.baseline) base_us = r.median_us;
  }
  write_text(run / "speed.env", environment_stamp(cfg.bench.threads) + "\nbaseline=" + cfg.baseline +
                                    "\nbaseline_median_us=" + format_real(base_us) + "\nprecision=" +
                                    precision_name(cfg.precision) + "\nframes=" + std::to_string(test_set.size()) +
                                    "\n");

  std::vector<ModelId> ids;
  seen.clear();
  for (const auto& id : cfg.models) {
    if (seen.insert(id.name()).second) ids.push_back(id);
  }
  const auto params = profile_params(ids, ds.num_classes());
  write_params_csv(run / "params.csv", params);
  out << "wrote " << (run / "speed.csv").string() << " and " << (run / "params.csv").string() << "\n";
  return kExitOk;
}

int cmd_report(const Options& opt, std::ostream& out) {
  auto cfg = resolve_config(opt);
  const fs::path run = cfg.out;
  const auto data = load_run(run);
  const auto tables = build_report(data, cfg.baseline, opt.welch ? TTestKind::kWelch : TTestKind::kPooled);
  write_report(run, tables, opt.svg);
  out << "models " << data.models.size() << ", figure tables written to " << run.string() << "\n";
  for (const auto& row : tables.overall.rows) {
    out << "  " << std::left << std::setw(24) << row[0] << std::right << " mean " << row[1] << " std " << row[2]
        << " (" << row[3] << " trials)\n";
  }
  for (const auto& row : tables.pvalues.rows) out << "  p(" << row[0] << ", " << row[1] << ") = " << row[3] << "\n";
  return kExitOk;
}

int cmd_selftest(const Options& opt, std::ostream& out) {
  if (!opt.inject_fault.empty() && opt.inject_fault != "complex-sign-flip") {
    throw ConfigError("unknown fault '" + opt.inject_fault + "' (known: complex-sign-flip)");
  }
  struct FaultGuard {
    explicit FaultGuard(bool on) { testing::set_complex_conv_sign_fault(on); }
    ~FaultGuard() { testing::set_complex_conv_sign_fault(false); }
  } guard(!opt.inject_fault.empty());

  selfcheck::Options so;
  so.seed = opt.seed.value_or(0);
  bool ok = true;
  for (const auto& r : selfcheck::run_all(so)) {
    ok = ok && r.passed();
    out << (r.passed() ? "PASS " : "FAIL ") << std::left << std::setw(40) << r.name << std::right << " max error "
        << std::scientific << std::setprecision(3) << r.max_error << " (tol " << r.tolerance << ", "
        << r.instances << " instances)" << std::defaultfloat << "\n";
  }
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? kExitOk : kExitNumeric;
}

int cmd_convert_info(const Options& opt, std::ostream& out) {
  out << dataset_format_description();
  if (!opt.data) return kExitOk;
  const auto ds = load_data(*opt.data);
  out << "\n" << opt.data->string() << ": " << ds.size() << " frames, crc32 " << hex(ds.provenance, 8) << "\n";
  std::map<std::pair<int, int>, std::size_t> counts;
  std::set<int> snrs;
  for (const auto& f : ds.frames) {
    ++counts[{f.label, f.snr_db}];
    snrs.insert(f.snr_db);
  }
  out << std::left << std::setw(10) << "class";
  for (int s : snrs) out << std::right << std::setw(6) << s;
  out << "\n";
  for (std::size_t c = 0; c < ds.num_classes(); ++c) {
    out << std::left << std::setw(10) << ds.class_names[c];
    for (int s : snrs) out << std::right << std::setw(6) << counts[{static_cast<int>(c), s}];
    out << "\n";
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"iqnet: complex-valued CNNs for I/Q modulation classification"};
  app.require_subcommand(1);
  Options opt;
  std::string precision;
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment config (key = value sections)")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output file or run directory");
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_option("--threads", opt.threads, "thread count recorded with timings")->check(CLI::PositiveNumber);
    sub->add_option("--precision", precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));
    sub->add_option("--trials", opt.trials, "number of trials")->check(CLI::PositiveNumber);
    sub->add_option("--data", opt.data, "dataset file");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic I/Q dataset file");
  auto* tr = app.add_subcommand("train", "train every configured model for every trial");
  auto* ev = app.add_subcommand("eval", "evaluate saved weights on a dataset");
  auto* be = app.add_subcommand("bench", "measure inference speed and parameter counts");
  auto* rep = app.add_subcommand("report", "aggregate a run directory into figure tables");
  auto* st = app.add_subcommand("selftest", "run oracle and gradient checks");
  auto* ci = app.add_subcommand("convert-info", "describe the dataset file format (and check a file)");
  for (auto* s : {gen, tr, ev, be, rep, st, ci}) common(s);
  ev->add_option("--weights", opt.weights, "weight file")->check(CLI::ExistingFile);
  rep->add_flag("--svg", opt.svg, "also render SVG plots");
  rep->add_flag("--welch", opt.welch, "use Welch's unequal-variance t-test");
  st->add_option("--inject-fault", opt.inject_fault, "deliberately break a kernel (complex-sign-flip)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!precision.empty()) opt.precision = parse_precision(precision);
    if (gen->parsed()) return cmd_gen_data(opt, out);
    if (tr->parsed()) return cmd_train(opt, out);
    if (ev->parsed()) return cmd_eval(opt, out);
    if (be->parsed()) return cmd_bench(opt, out);
    if (rep->parsed()) return cmd_report(opt, out);
    if (st->parsed()) return cmd_selftest(opt, out);
    if (ci->parsed()) return cmd_convert_info(opt, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace iqnet::cli
