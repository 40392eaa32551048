// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   iqnet_acceptance [--only N]... [--work DIR]
//
// Exit status is 0 when nothing failed, 1 otherwise; 77 when every selected
// criterion was skipped (ctest's skip convention).

#include <CLI11.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "iqnet/artifacts.hpp"
#include "iqnet/bench.hpp"
#include "iqnet/complex_conv.hpp"
#include "iqnet/signal.hpp"
#include "iqnet/stats.hpp"
#include "layer_cases.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace iqnet;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Verdict {
  Status status;
  std::string detail;
};

Verdict pass_if(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

std::string sci(double v, int digits = 2) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(digits) << v;
  return os.str();
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  /// Runs a CLI command in-process, appending its output to cli.log.
  int cli(std::vector<std::string> args) {
    std::ofstream log(root_ / "cli.log", std::ios::app);
    log << "$ iqnet";
    for (const auto& a : args) log << " " << a;
    log << "\n";
    args.insert(args.begin(), "iqnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), log, err);
    log << err.str() << "exit " << code << "\n" << std::flush;
    if (code != 0) last_error_ = err.str();
    return code;
  }

  const std::string& last_error() const { return last_error_; }

 private:
  fs::path root_;
  std::string last_error_;
};

// ---------------------------------------------------------------------------
// 1. Complex convolution against a native std::complex sliding dot product.

Verdict complex_conv_oracle(Workspace&) {
  Rng rng(0xC0DE);
  const int instances = 200;
  double worst = 0, worst_padded = 0;
  std::size_t bit_identical = 0;
  for (int i = 0; i < instances; ++i) {
    const std::size_t cin = 1 + rng.uniform_int(4), cout = 1 + rng.uniform_int(4);
    const std::size_t m = 1 + rng.uniform_int(7), n = m + rng.uniform_int(65 - m);
    const std::size_t pad = rng.uniform_int(3), stride = 1 + rng.uniform_int(2);
    ComplexKernelBank<double> bank(cout, cin, m);
    bank.weights = oracle::random_tensor(bank.weights.shape(), rng);
    bank.bias = oracle::random_tensor(bank.bias.shape(), rng);
    const auto x = oracle::random_tensor({cin, 2, n}, rng);
    const auto want = oracle::native_complex_conv(x, bank.weights, bank.bias, pad, stride);
    const auto got = complex_conv_forward(x, bank, pad, stride);
    const auto padded = complex_conv_forward_padded(x, bank, pad, stride);
    if (got.shape() != want.shape() || padded.shape() != want.shape()) return {Status::kFail, "shape mismatch"};
    worst = std::max(worst, max_abs_diff(got, want));
    worst_padded = std::max(worst_padded, max_abs_diff(padded, want));
    bit_identical += padded == got;
  }
  const double tol = 1e-12;
  return pass_if(worst < tol && worst_padded < tol,
                 "max |diff| " + sci(worst) + " (linear combination), " + sci(worst_padded) +
                     " (padded realization) over " + std::to_string(instances) + " instances, tol " + sci(tol, 0) +
                     "; padded output bit-identical in " + std::to_string(bit_identical) + "/" +
                     std::to_string(instances));
}

// ---------------------------------------------------------------------------
// 2. Finite-difference gradient certification of every layer kind.

Verdict gradient_certification(Workspace&) {
  const double tol = 1e-4;
  const int instances = 20;
  double worst = 0;
  std::string worst_kind;
  std::size_t kinds = 0;
  Rng rng(0x6AD);
  for (const auto& c : oracle::gradient_cases()) {
    for (int i = 0; i < instances; ++i) {
      std::vector<Tensor<double>> ins;
      for (const auto& s : c.inputs) ins.push_back(oracle::random_tensor(s, rng));
      const double e = oracle::layer_grad_error(c.make, ins, c.mode, 5000 + static_cast<std::uint64_t>(i));
      if (!(e <= worst)) {
        worst = e;
        worst_kind = c.name;
      }
    }
    ++kinds;
  }
  for (int i = 0; i < instances; ++i) {
    const std::size_t b = 1 + rng.uniform_int(6), k = 2 + rng.uniform_int(10);
    const auto logits = oracle::random_tensor({b, k}, rng, 4.0);
    std::vector<int> labels(b);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_int(k));
    const auto analytic = softmax_xent(logits, std::span<const int>(labels)).grad_logits;
    const auto numeric = oracle::numeric_grad(
        [&](const Tensor<double>& z) { return softmax_xent(z, std::span<const int>(labels)).loss; }, logits);
    const double e = oracle::rel_err(analytic, numeric);
    if (!(e <= worst)) {
      worst = e;
      worst_kind = "softmax_xent";
    }
  }
  ++kinds;
  return pass_if(worst < tol, std::to_string(kinds) + " layer kinds x " + std::to_string(instances) +
                                  " instances, worst relative error " + sci(worst) + " (" + worst_kind + "), tol " +
                                  sci(tol, 0));
}

// ---------------------------------------------------------------------------
// 3. Parameter accounting.

Verdict parameter_accounting(Workspace&) {
  bool ok = true;
  std::size_t grids = 0;
  Rng rng(3);
  for (std::size_t cin = 1; cin <= 4; ++cin)
    for (std::size_t cout = 1; cout <= 4; ++cout)
      for (std::size_t m = 1; m <= 7; ++m) {
        ComplexConv<double> c(cin, cout, m, 0, 1, rng);
        RealConv<double> r(cin, cout, 1, m, 0, 1, rng);
        ok = ok && c.param_count() == 2 * r.param_count();
        ok = ok && c.param_count() == 2 * (cout * cin * m + cout);
        ++grids;
      }
  std::ostringstream detail;
  detail << "kernel grid " << grids << " shapes " << (ok ? "exactly 2x" : "NOT 2x") << "; ratios";
  std::vector<ModelId> ids;
  for (auto f : kAllFamilies) ids.push_back({f, true, 1.0});
  for (const auto& p : profile_params(ids)) {
    const auto id = ModelId::parse(p.model);
    // Independent count: sum of every parameter tensor in freshly built graphs.
    auto count = [](const ModelId& m) {
      auto g = build<float>(m);
      std::size_t n = 0;
      for (const auto& np : g.parameters()) n += np.param->value.size();
      return n;
    };
    const double ratio = static_cast<double>(count(id)) / static_cast<double>(count(id.real_counterpart()));
    ok = ok && std::abs(ratio - p.ratio) < 1e-15;
    const bool in_band = id.family == Family::kKrzyston2020 ? (ratio > 1.0 && ratio < 1.1)
                                                              : (ratio > 1.5 && ratio <= 2.0);
    ok = ok && in_band;
    detail << " " << family_name(id.family) << "=" << fixed(ratio) << (in_band ? "" : "(out of band)");
  }
  return pass_if(ok, detail.str());
}

// ---------------------------------------------------------------------------
// 4. Dataset calibration and determinism.

Verdict dataset_calibration(Workspace& ws) {
  auto cfg = DatasetConfig::full();
  cfg.seed = 404;
  double worst_snr = 0;
  for (int snr : cfg.snrs_db) {
    double ps = 0, pn = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto parts = generate_frame_parts(cfg, i % cfg.modulations.size(), snr, i);
      for (std::size_t k = 0; k < parts.clean.size(); ++k) {
        ps += parts.clean[k] * parts.clean[k];
        const double d = parts.noisy[k] - parts.clean[k];
        pn += d * d;
      }
    }
    worst_snr = std::max(worst_snr, std::abs(10 * std::log10(ps / pn) - snr));
  }

  double worst_power = 0;
  ModulatorParams prm;
  for (std::size_t mi = 0; mi < 11; ++mi) {
    const auto m = static_cast<Modulation>(mi);
    Rng rng(900 + mi);
    std::vector<int> sym(2000);
    for (auto& s : sym) s = static_cast<int>(rng.uniform_int(std::max<std::size_t>(alphabet_size(m), 1)));
    const auto s = modulate(m, sym, prm, rng);
    const std::size_t guard = prm.span * prm.sps, len = s.extent(1);
    double p = 0;
    for (std::size_t n = guard; n < len - guard; ++n) p += s.at(0, n) * s.at(0, n) + s.at(1, n) * s.at(1, n);
    worst_power = std::max(worst_power, std::abs(p / static_cast<double>(len - 2 * guard) - 1.0));
  }

  DatasetConfig desk;
  desk.modulations = {Modulation::kBPSK, Modulation::kQPSK, Modulation::kQAM16, Modulation::kGFSK};
  desk.snrs_db = {-10, 0, 10};
  desk.frames_per_pair = 50;
  desk.seed = 11;
  const auto dir = ws.root() / "calibration";
  fs::create_directories(dir);
  const auto crc_a = save_dataset(generate_dataset(desk), dir / "a.cxiq");
  const auto crc_b = save_dataset(generate_dataset(desk), dir / "b.cxiq");
  desk.seed = 12;
  const auto crc_c = save_dataset(generate_dataset(desk), dir / "c.cxiq");
  const bool same = crc_a == crc_b && slurp(dir / "a.cxiq") == slurp(dir / "b.cxiq");
  const bool differs = crc_a != crc_c;

  const bool ok = worst_snr <= 0.5 && worst_power <= 0.01 && same && differs;
  return pass_if(ok, "worst SNR error " + fixed(worst_snr, 3) + " dB over 20 grid points x 1000 frames (tol 0.5)" +
                         ", worst power error " + fixed(100 * worst_power, 3) + "% (tol 1%)" +
                         ", same-seed files " + (same ? "identical" : "DIFFER") + ", other seed " +
                         (differs ? "differs" : "IDENTICAL"));
}

// ---------------------------------------------------------------------------
// Shared desk sweep for criteria 5 and 6.

const char* const kSweepConfig =
    "[dataset]\n"
    "modulations = BPSK,QPSK,8PSK,PAM4,QAM16,QAM64\n"
    "snrs = -4,0,4,8,12,16\n"
    "frames_per_pair = 300\n"
    "seed = 2024\n"
    "\n"
    "[models]\n"
    "ids = krzyston2020,krzyston2020-c,resnet18@0.25,resnet18-c@0.25\n"
    "\n"
    "[train]\n"
    "epochs = 10\n"
    "batch_size = 128\n"
    "precision = f32\n"
    "seed = 99\n"
    "\n"
    "[experiment]\n"
    "trials = 3\n"
    "out = @RUN@\n"
    "data = @DATA@\n"
    "\n"
    "[bench]\n"
    "reps = 5\n"
    "warmup = 1\n"
    "frames = 512\n";

struct Pair {
  std::string real;
  std::string complex;
};
const Pair kPairs[] = {{"krzyston2020", "krzyston2020-c"}, {"resnet18@0.25", "resnet18-c@0.25"}};
constexpr std::uint64_t kSweepSeed = 99;
constexpr std::size_t kSweepTrials = 3;

struct Sweep {
  fs::path config;
  fs::path data;
  fs::path run;
};

// Writes the config, (re)generates the data and trains whatever trials are
// not complete yet. A changed config invalidates earlier results.
Sweep ensure_sweep(Workspace& ws) {
  Sweep s;
  const auto dir = ws.root() / "sweep";
  s.config = dir / "exp.ini";
  s.data = dir / "desk.cxiq";
  s.run = dir / "run";
  std::string text = kSweepConfig;
  text.replace(text.find("@RUN@"), 5, s.run.string());
  text.replace(text.find("@DATA@"), 6, s.data.string());
  if (fs::exists(s.config) && slurp(s.config) != text) fs::remove_all(s.run);
  spit(s.config, text);
  if (ws.cli({"gen-data", "--config", s.config.string()}) != 0) throw Error("gen-data failed: " + ws.last_error());
  std::cerr << "  training the desk sweep (resumes completed trials; progress in " << (ws.root() / "cli.log")
            << ")\n";
  if (ws.cli({"train", "--config", s.config.string()}) != 0) throw Error("train failed: " + ws.last_error());
  return s;
}

std::map<std::string, std::vector<TrialRecord>> sweep_records(const Sweep& s) {
  std::map<std::string, std::vector<TrialRecord>> out;
  for (auto& r : read_trial_records(s.run / "overall.csv", s.run / "per_snr.csv")) out[r.model].push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// 5. Desk-scale trend: complex variants beat their real counterparts.

Verdict desk_trend(Workspace& ws) {
  const auto s = ensure_sweep(ws);
  const auto recs = sweep_records(s);
  const auto ds = load_dataset(s.data);

  // Test-split bucket sizes per trial, recomputed from the shared split seed.
  std::vector<std::map<int, std::size_t>> bucket(kSweepTrials);
  for (std::size_t t = 0; t < kSweepTrials; ++t) {
    const auto test = split_shuffle(ds, 0.5, cli::trial_seeds(kSweepSeed, t).split).second;
    for (const auto& f : test.frames) ++bucket[t][f.snr_db];
  }
  auto pooled_nonneg = [&](const TrialRecord& r) {
    double correct = 0, total = 0;
    for (const auto& [snr, acc] : r.per_snr) {
      if (snr < 0) continue;
      const auto n = static_cast<double>(bucket[r.trial].at(snr));
      correct += acc * n;
      total += n;
    }
    return correct / total;
  };

  bool ok = true;
  std::ostringstream detail;
  for (const auto& p : kPairs) {
    const auto& real = recs.at(p.real);
    const auto& cplx = recs.at(p.complex);
    if (real.size() != kSweepTrials || cplx.size() != kSweepTrials) return {Status::kFail, "incomplete sweep"};
    double mean_r = 0, mean_c = 0;
    std::size_t wins = 0;
    detail << p.complex << " vs " << p.real << ": margins(SNR>=0)";
    for (std::size_t t = 0; t < kSweepTrials; ++t) {
      mean_r += real[t].accuracy / kSweepTrials;
      mean_c += cplx[t].accuracy / kSweepTrials;
      const double margin = pooled_nonneg(cplx[t]) - pooled_nonneg(real[t]);
      wins += margin >= 0.03;
      detail << " " << std::showpos << fixed(margin, 3) << std::noshowpos;
    }
    const bool pair_ok = mean_c > mean_r && wins >= 2;
    ok = ok && pair_ok;
    detail << ", mean overall " << fixed(mean_c) << " vs " << fixed(mean_r) << (pair_ok ? " [ok]" : " [not met]")
           << "; ";
  }
  return pass_if(ok, detail.str());
}

// ---------------------------------------------------------------------------
// 6. Protocol tables and statistics from the same sweep.

double oracle_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Verdict protocol_reproduction(Workspace& ws) {
  const auto s = ensure_sweep(ws);
  if (ws.cli({"report", "--config", s.config.string(), "--svg"}) != 0) {
    return {Status::kFail, "report failed: " + ws.last_error()};
  }
  const auto recs = sweep_records(s);
  bool ok = true;
  std::ostringstream detail;

  const auto fig3 = read_csv(s.run / cli::kFig3File);
  const auto fig4 = read_csv(s.run / cli::kFig4File);
  const auto fig4p = read_csv(s.run / cli::kFig4PFile);
  const std::size_t models = recs.size();
  ok = ok && fig3.rows.size() == models * 6 && fig4.rows.size() == models &&
       fig4p.rows.size() == models * (models - 1) / 2;
  ok = ok && fig3.header == std::vector<std::string>{"model", "snr_db", "mean", "std", "trials"};
  detail << "tables " << fig3.rows.size() << " accuracy-vs-SNR rows, " << fig4.rows.size() << " overall rows, "
         << fig4p.rows.size() << " p-value pairs";

  // Mean and n-1 standard deviation, computed directly.
  double worst_ms = 0;
  for (const auto& row : fig4.rows) {
    const auto& r = recs.at(row[0]);
    double mean = 0;
    for (const auto& x : r) mean += x.accuracy;
    mean /= static_cast<double>(r.size());
    double ss = 0;
    for (const auto& x : r) ss += (x.accuracy - mean) * (x.accuracy - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size() - 1));
    worst_ms = std::max({worst_ms, std::abs(parse_real(row[1]) - mean), std::abs(parse_real(row[2]) - sd)});
  }
  ok = ok && worst_ms < 1e-12;

  // Pooled two-sample t with an external Student t distribution.
  double worst_p = 0;
  for (const auto& row : fig4p.rows) {
    std::vector<double> a, b;
    for (const auto& x : recs.at(row[0])) a.push_back(x.accuracy);
    for (const auto& x : recs.at(row[1])) b.push_back(x.accuracy);
    auto moments = [](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::pair{m, ss};
    };
    const auto [ma, sa] = moments(a);
    const auto [mb, sb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double df = na + nb - 2;
    const double t = (ma - mb) / std::sqrt((sa + sb) / df * (1 / na + 1 / nb));
    worst_p = std::max(worst_p, std::abs(parse_real(row[3]) - oracle_two_sided_p(t, df)));
  }
  ok = ok && worst_p < 1e-6;

  const std::vector<double> example{0.6, 0.62};
  const auto ms = mean_std(example);
  const bool example_ok = std::abs(ms.mean - 0.61) < 1e-12 && std::abs(ms.std - 0.014142135623730963) < 1e-12;
  ok = ok && example_ok;

  detail << "; mean/std max deviation " << sci(worst_ms) << "; p-value max deviation from oracle " << sci(worst_p)
         << " (tol 1e-06); [0.6, 0.62] -> " << fixed(ms.mean, 2) << " +- " << fixed(ms.std, 5);
  return pass_if(ok, detail.str());
}

// ---------------------------------------------------------------------------
// 7. Speed analysis properties.

Verdict speed_properties(Workspace& ws) {
  const auto dir = ws.root() / "speed";
  std::string text = kSweepConfig;
  text.replace(text.find("@RUN@"), 5, (dir / "run").string());
  text.replace(text.find("@DATA@"), 6, (dir / "desk.cxiq").string());
  spit(dir / "exp.ini", text);
  if (ws.cli({"gen-data", "--config", (dir / "exp.ini").string()}) != 0) {
    return {Status::kFail, "gen-data failed: " + ws.last_error()};
  }
  fs::remove(dir / "run" / "speed.csv");
  if (ws.cli({"bench", "--config", (dir / "exp.ini").string()}) != 0) {
    return {Status::kFail, "bench failed: " + ws.last_error()};
  }
  const auto speed = read_csv(dir / "run" / "speed.csv");
  const auto params = read_csv(dir / "run" / "params.csv");
  bool ok = speed.header == std::vector<std::string>{"model", "batch", "reps", "mean_us", "median_us", "min_us",
                                                     "normalized"} &&
            params.header == std::vector<std::string>{"model", "params", "ratio"} && speed.rows.size() == 4 &&
            params.rows.size() == 4;
  std::map<std::string, std::pair<double, double>> median_norm;
  for (const auto& row : speed.rows) median_norm[row[0]] = {parse_real(row[4]), parse_real(row[6])};
  const bool self_one = median_norm.count("krzyston2020-c") && median_norm["krzyston2020-c"].second == 1.0;
  ok = ok && self_one;
  std::ostringstream detail;
  detail << "schemas " << (ok ? "exact" : "WRONG") << ", baseline self-normalization "
         << (self_one ? "1.0" : "NOT 1.0") << "; median us/sample:";
  for (const auto& p : kPairs) {
    const double r = median_norm[p.real].first, c = median_norm[p.complex].first;
    const bool pair_ok = c >= 0.9 * r;
    ok = ok && pair_ok;
    detail << " " << p.complex << " " << fixed(c, 1) << " vs " << p.real << " " << fixed(r, 1) << " (x"
           << fixed(c / r, 2) << (pair_ok ? ")" : ", below 0.9)");
  }
  return pass_if(ok, detail.str());
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism at 64-bit.

Verdict end_to_end_determinism(Workspace& ws) {
  const char* const config =
      "[dataset]\nmodulations = BPSK,QPSK,QAM16,GFSK\nsnrs = -10,0,10\nframes_per_pair = 50\nseed = 8\n\n"
      "[models]\nids = resnet18@0.25,resnet18-c@0.25\n\n"
      "[train]\nepochs = 2\nbatch_size = 32\nprecision = f64\nseed = 21\n\n"
      "[experiment]\ntrials = 2\nout = @RUN@\ndata = @DATA@\n";
  std::vector<std::string> accuracy_columns, losses, datasets;
  for (const char* leg : {"first", "second"}) {
    const auto dir = ws.root() / "determinism" / leg;
    fs::remove_all(dir);
    std::string text = config;
    text.replace(text.find("@RUN@"), 5, (dir / "run").string());
    text.replace(text.find("@DATA@"), 6, (dir / "desk.cxiq").string());
    spit(dir / "exp.ini", text);
    if (ws.cli({"gen-data", "--config", (dir / "exp.ini").string()}) != 0 ||
        ws.cli({"train", "--config", (dir / "exp.ini").string()}) != 0) {
      return {Status::kFail, std::string(leg) + " run failed: " + ws.last_error()};
    }
    std::string acc;
    for (const auto& row : read_csv(dir / "run" / "overall.csv").rows) acc += (acc.empty() ? "" : " ") + row[0] + "=" + row[2];
    accuracy_columns.push_back(acc);
    // Loss values and weights only; loss.csv also carries wall-clock seconds.
    std::string trace;
    for (const auto& model : {"resnet18@0.25", "resnet18-c@0.25"}) {
      const auto td = dir / "run" / model / "trial_1";
      for (const auto& row : read_csv(td / "loss.csv").rows) trace += row[1] + " ";
      trace += slurp(td / "weights.iqnw");
    }
    losses.push_back(trace);
    datasets.push_back(slurp(dir / "desk.cxiq"));
  }
  const bool data_same = datasets[0] == datasets[1];
  const bool acc_same = accuracy_columns[0] == accuracy_columns[1];
  const bool loss_same = losses[0] == losses[1];
  return pass_if(data_same && acc_same && loss_same && !accuracy_columns[0].empty(),
                 std::string("dataset bytes ") + (data_same ? "identical" : "DIFFER") + ", overall.csv accuracies " +
                     (acc_same ? "bit-identical" : "DIFFER") + " (" + accuracy_columns[0] + "), loss histories and weights " +
                     (loss_same ? "identical" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// 9. Converter fidelity needs the external archive and the optional converter.

Verdict converter_fidelity(Workspace&) {
  return {Status::kSkip, "optional archive converter is not part of this build and no archive is available"};
}

struct Criterion {
  int number;
  const char* title;
  std::function<Verdict(Workspace&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks for the iqnet library and CLI"};
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "iqnet_acceptance").string();
  app.add_option("--only", only, "run only the given criterion (repeatable)")->check(CLI::Range(1, 9));
  app.add_option("--work", work, "scratch directory; the training sweep resumes from here");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "complex-convolution oracle", complex_conv_oracle},
      {2, "gradient certification", gradient_certification},
      {3, "parameter accounting", parameter_accounting},
      {4, "dataset calibration", dataset_calibration},
      {5, "desk-scale trend", desk_trend},
      {6, "protocol reproduction", protocol_reproduction},
      {7, "speed analysis", speed_properties},
      {8, "end-to-end determinism", end_to_end_determinism},
      {9, "converter fidelity", converter_fidelity},
  };

  Workspace ws(work);
  std::size_t failed = 0, skipped = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    ++ran;
    const auto started = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(ws);
    } catch (const std::exception& e) {
      v = {Status::kFail, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const char* tag = v.status == Status::kPass ? "PASS" : v.status == Status::kFail ? "FAIL" : "SKIP";
    failed += v.status == Status::kFail;
    skipped += v.status == Status::kSkip;
    std::cout << "criterion " << c.number << " " << tag << "  " << c.title << ": " << v.detail << " ["
              << fixed(secs, 1) << " s]" << std::endl;
  }
  if (failed) return 1;
  return ran > 0 && skipped == ran ? 77 : 0;
}
