#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

#include <unistd.h>

#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "iqnet/artifacts.hpp"
#include "temp_dir.hpp"

namespace iqnet::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome iqnet(std::vector<std::string> args) {
  args.insert(args.begin(), "iqnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Desk-sized experiment rooted in `dir`; `extra` is appended verbatim.
fs::path write_config(const testutil::ScratchDir& dir, const std::string& models, std::size_t trials,
                      const std::string& extra = "") {
  const auto path = dir / "exp.ini";
  spit(path, "[dataset]\nmodulations = BPSK,QPSK,QAM16,GFSK\nsnrs = -10,0,10\nframes_per_pair = 50\nseed = 5\n\n"
             "[models]\nids = " + models + "\n\n"
             "[train]\nepochs = 1\nbatch_size = 32\nprecision = f64\nseed = 13\n\n"
             "[experiment]\ntrials = " + std::to_string(trials) + "\nout = " + (dir / "run").string() +
             "\ndata = " + (dir / "desk.cxiq").string() + "\n\n"
             "[bench]\nreps = 5\nwarmup = 1\nframes = 32\n" + extra);
  return path;
}

std::string meta_value(const fs::path& meta, const std::string& key) {
  const std::regex re(key + "=(.*)");
  std::smatch m;
  const auto text = slurp(meta);
  if (!std::regex_search(text, m, re)) return {};
  return m[1];
}

TEST(GenData, DeskConfigIsDeterministic) {
  testutil::ScratchDir dir;
  const auto cfg = write_config(dir, "resnet18@0.25", 1);
  const auto a = iqnet({"gen-data", "--config", cfg.string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("wrote 600 frames"), std::string::npos) << a.out;
  EXPECT_NE(a.out.find("0=BPSK 1=QPSK 2=QAM16 3=GFSK"), std::string::npos) << a.out;
  std::smatch crc;
  ASSERT_TRUE(std::regex_search(a.out, crc, std::regex("crc32 (0x[0-9a-f]{8})")));
  const auto first = slurp(dir / "desk.cxiq");

  const auto b = iqnet({"gen-data", "--config", cfg.string(), "--out", (dir / "again.cxiq").string()});
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(dir / "again.cxiq"), first);
  EXPECT_NE(b.out.find(crc[1].str()), std::string::npos);

  const auto c = iqnet({"gen-data", "--config", cfg.string(), "--seed", "6", "--out", (dir / "other.cxiq").string()});
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(slurp(dir / "other.cxiq"), first);
}

TEST(GenData, FullConfigHoldsTwoHundredTwentyThousandFrames) {
  testutil::ScratchDir dir;
  const auto path = dir / "full.cxiq";
  const auto r = iqnet({"gen-data", "--out", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 220000 frames"), std::string::npos);
  const auto ds = load_dataset(path);
  EXPECT_EQ(ds.size(), 220000u);
  EXPECT_EQ(ds.num_classes(), 11u);
  std::map<std::pair<int, int>, std::size_t> counts;
  for (const auto& f : ds.frames) ++counts[{f.label, f.snr_db}];
  EXPECT_EQ(counts.size(), 220u);
  for (const auto& [key, n] : counts) EXPECT_EQ(n, 1000u);
  const auto [train, test] = split_shuffle(ds, 0.5, 42);
  EXPECT_EQ(train.size(), 110000u);
  EXPECT_EQ(test.size(), 110000u);
}

TEST(Config, UnknownKeysAndSectionsAreUsageErrors) {
  testutil::ScratchDir dir;
  auto cfg = write_config(dir, "resnet18@0.25", 1, "repz = 5\n");
  auto r = iqnet({"gen-data", "--config", cfg.string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("repz"), std::string::npos) << r.err;

  cfg = write_config(dir, "resnet18@0.25", 1, "[extras]\nfoo = 1\n");
  r = iqnet({"gen-data", "--config", cfg.string()});
  EXPECT_EQ(r.code, kExitUsage);

  cfg = write_config(dir, "resnet99", 1);
  EXPECT_EQ(iqnet({"train", "--config", cfg.string()}).code, kExitUsage);
}

TEST(Usage, BadInvocationsExitWithOne) {
  EXPECT_EQ(iqnet({}).code, kExitUsage);
  EXPECT_EQ(iqnet({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(iqnet({"selftest", "--precision", "f16"}).code, kExitUsage);
  EXPECT_EQ(iqnet({"selftest", "--inject-fault", "nonsense"}).code, kExitUsage);
  EXPECT_EQ(iqnet({"gen-data", "--config", "/nonexistent/exp.ini"}).code, kExitUsage);
}

TEST(Train, MissingDatasetIsADataError) {
  testutil::ScratchDir dir;
  const auto cfg = write_config(dir, "resnet18@0.25", 1);
  const auto r = iqnet({"train", "--config", cfg.string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(r.err.empty());
}

class Sweep : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::ScratchDir("cli_sweep_" + std::to_string(::getpid()));
    config_ = write_config(*dir_, "resnet18@0.25,resnet18-c@0.25", 3);
    ASSERT_EQ(iqnet({"gen-data", "--config", config_.string()}).code, 0);
    const auto r = iqnet({"train", "--config", config_.string()});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static fs::path run() { return *dir_ / "run"; }

  static testutil::ScratchDir* dir_;
  static fs::path config_;
};

testutil::ScratchDir* Sweep::dir_ = nullptr;
fs::path Sweep::config_;

TEST_F(Sweep, OneArtifactSetPerModelAndTrial) {
  std::size_t weights = 0;
  for (const auto& e : fs::recursive_directory_iterator(run())) weights += e.path().filename() == "weights.iqnw";
  EXPECT_EQ(weights, 6u);
  const auto overall = read_csv(run() / "overall.csv");
  EXPECT_EQ(overall.header, kOverallColumns);
  ASSERT_EQ(overall.rows.size(), 6u);
  EXPECT_EQ(overall.rows[0][0], "resnet18@0.25");
  EXPECT_EQ(overall.rows[3][0], "resnet18-c@0.25");
  const auto per_snr = read_csv(run() / "per_snr.csv");
  EXPECT_EQ(per_snr.header, kPerSnrColumns);
  EXPECT_EQ(per_snr.rows.size(), 18u);
  const auto conf = read_confusion_csv(run() / "resnet18@0.25" / "trial_1" / "confusion.csv");
  ASSERT_EQ(conf.size(), 4u);
  std::size_t total = 0;
  for (const auto& row : conf)
    for (auto n : row) total += n;
  EXPECT_EQ(total, 300u);
  EXPECT_EQ(read_csv(run() / "resnet18@0.25" / "trial_0" / "loss.csv").header, kLossColumns);
}

TEST_F(Sweep, SplitsDifferPerTrialAndAreSharedAcrossModels) {
  std::set<std::string> hashes;
  for (std::size_t t = 0; t < 3; ++t) {
    const auto name = "trial_" + std::to_string(t);
    const auto a = meta_value(run() / "resnet18@0.25" / name / "meta.txt", "test_split_hash");
    const auto b = meta_value(run() / "resnet18-c@0.25" / name / "meta.txt", "test_split_hash");
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    hashes.insert(a);
  }
  EXPECT_EQ(hashes.size(), 3u);
}

TEST_F(Sweep, RerunReproducesAccuraciesAndResumes) {
  const auto fresh = *dir_ / "rerun";
  const auto r = iqnet({"train", "--config", config_.string(), "--out", fresh.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = read_csv(run() / "overall.csv"), b = read_csv(fresh / "overall.csv");
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i][2], b.rows[i][2]);
  EXPECT_EQ(slurp(run() / "resnet18-c@0.25" / "trial_2" / "weights.iqnw"),
            slurp(fresh / "resnet18-c@0.25" / "trial_2" / "weights.iqnw"));

  const auto again = iqnet({"train", "--config", config_.string(), "--out", fresh.string()});
  ASSERT_EQ(again.code, 0);
  EXPECT_NE(again.out.find("already complete"), std::string::npos);
  EXPECT_EQ(read_csv(fresh / "overall.csv").rows, b.rows);
}

TEST_F(Sweep, ReportTablesHaveTheExpectedShapeAndStatistics) {
  const auto r = iqnet({"report", "--config", config_.string(), "--svg"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fig3 = read_csv(run() / kFig3File);
  EXPECT_EQ(fig3.rows.size(), 2u * 3u);
  const auto fig4p = read_csv(run() / kFig4PFile);
  ASSERT_EQ(fig4p.rows.size(), 1u);

  // Rows follow the report's own model order; look everything up by name.
  const auto overall = read_csv(run() / "overall.csv");
  std::map<std::string, std::vector<double>> acc;
  for (const auto& row : overall.rows) acc[row[0]].push_back(parse_real(row[2]));
  const auto t = ttest_unpaired(acc.at(fig4p.rows[0][0]), acc.at(fig4p.rows[0][1]));
  EXPECT_EQ(parse_real(fig4p.rows[0][3]), t.p);
  EXPECT_EQ(parse_real(fig4p.rows[0][2]), t.t);
  const auto fig4 = read_csv(run() / kFig4File);
  ASSERT_EQ(fig4.rows.size(), 2u);
  for (const auto& row : fig4.rows) {
    const auto ms = mean_std(acc.at(row[0]));
    EXPECT_EQ(parse_real(row[1]), ms.mean);
    EXPECT_EQ(parse_real(row[2]), ms.std);
  }
  EXPECT_EQ(read_csv(run() / kFig5File).rows.size(), 2u);
  EXPECT_EQ(read_csv(run() / kFig6File).rows.size(), 2u);
  for (const char* svg : {"fig3_accuracy_vs_snr.svg", "fig4_overall.svg", "fig5_params_vs_accuracy.svg",
                          "fig6_speed_vs_accuracy.svg"}) {
    EXPECT_EQ(slurp(run() / svg).rfind("<svg", 0), 0u) << svg;
  }
}

TEST_F(Sweep, EvalScoresSavedWeights) {
  const auto weights = run() / "resnet18@0.25" / "trial_0" / "weights.iqnw";
  const auto out = *dir_ / "eval";
  fs::create_directories(out);
  const auto r = iqnet({"eval", "--config", config_.string(), "--weights", weights.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("on 600 frames"), std::string::npos) << r.out;
  EXPECT_EQ(read_csv(out / "per_snr.csv").rows.size(), 3u);
  EXPECT_EQ(iqnet({"eval", "--config", config_.string()}).code, kExitUsage);
}

TEST_F(Sweep, BenchWritesOneRowPerModel) {
  const auto out = *dir_ / "bench";
  const auto r = iqnet({"bench", "--config", config_.string(), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto speed = read_csv(out / "speed.csv");
  EXPECT_EQ(speed.header, kSpeedColumns);
  ASSERT_EQ(speed.rows.size(), 2u);
  for (const auto& row : speed.rows) EXPECT_GT(parse_real(row[6]), 0.0);
  EXPECT_EQ(read_csv(out / "params.csv").rows.size(), 2u);
  const auto env = slurp(out / "speed.env");
  EXPECT_NE(env.find("baseline=krzyston2020-c"), std::string::npos);
  EXPECT_NE(env.find("threads=1"), std::string::npos);
}

TEST(Report, IdenticalTrialSetsGiveUnitPValues) {
  testutil::ScratchDir dir;
  const auto run = dir / "run";
  for (const char* model : {"alpha", "beta"}) {
    for (std::size_t t = 0; t < 3; ++t) {
      TrialRecord rec;
      rec.model = model;
      rec.trial = t;
      rec.accuracy = 0.5 + 0.01 * static_cast<double>(t);
      rec.params = 10;
      rec.per_snr = {{0, 0.4}, {10, 0.6 + 0.01 * static_cast<double>(t)}};
      const auto td = run / model / ("trial_" + std::to_string(t));
      fs::create_directories(td);
      write_overall_csv(td / "overall.csv", std::span<const TrialRecord>(&rec, 1));
      write_per_snr_csv(td / "per_snr.csv", std::span<const TrialRecord>(&rec, 1));
      spit(td / "DONE", "");
    }
  }
  const auto r = iqnet({"report", "--out", run.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto p = read_csv(run / kFig4PFile);
  ASSERT_EQ(p.rows.size(), 1u);
  EXPECT_EQ(parse_real(p.rows[0][3]), 1.0);
  EXPECT_EQ(parse_real(p.rows[0][2]), 0.0);
  EXPECT_EQ(iqnet({"report", "--out", run.string(), "--welch"}).code, 0);
  EXPECT_EQ(parse_real(read_csv(run / kFig4PFile).rows[0][3]), 1.0);
}

TEST(Report, EmptyRunDirectoryIsADataError) {
  testutil::ScratchDir dir;
  fs::create_directories(dir / "run");
  EXPECT_EQ(iqnet({"report", "--out", (dir / "run").string()}).code, kExitData);
  EXPECT_EQ(iqnet({"report", "--out", (dir / "absent").string()}).code, kExitData);
}

TEST(Train, DivergenceIsRecordedAndTheSweepContinues) {
  testutil::ScratchDir dir;
  const auto cfg = write_config(dir, "resnet18@0.25,resnet18-c@0.25", 1);
  ASSERT_EQ(iqnet({"gen-data", "--config", cfg.string()}).code, 0);
  auto text = slurp(cfg);
  text.replace(text.find("seed = 13"), 9, "seed = 13\nlr = 1e30");
  spit(cfg, text);
  const auto r = iqnet({"train", "--config", cfg.string(), "--precision", "f32"});
  EXPECT_EQ(r.code, kExitNumeric) << r.out << r.err;
  EXPECT_TRUE(fs::exists(dir / "run" / "resnet18@0.25" / "trial_0" / "DIVERGED"));
  EXPECT_TRUE(fs::exists(dir / "run" / "resnet18-c@0.25" / "trial_0" / "DIVERGED"));
  EXPECT_NE(slurp(dir / "run" / "resnet18@0.25" / "trial_0" / "DIVERGED").find("epoch 0"), std::string::npos);
}

TEST(Selftest, PassesAndCatchesAnInjectedFault) {
  const auto ok = iqnet({"selftest"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  EXPECT_NE(ok.out.find("PASS"), std::string::npos);
  EXPECT_NE(ok.out.find("max error"), std::string::npos);

  const auto bad = iqnet({"selftest", "--inject-fault", "complex-sign-flip"});
  EXPECT_EQ(bad.code, kExitNumeric);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);

  // The fault must not leak into later calls.
  EXPECT_EQ(iqnet({"selftest"}).code, 0);
}

TEST(ConvertInfo, DescribesFormatAndChecksFiles) {
  testutil::ScratchDir dir;
  const auto info = iqnet({"convert-info"});
  ASSERT_EQ(info.code, 0);
  EXPECT_NE(info.out.find("CXIQ"), std::string::npos);

  const auto cfg = write_config(dir, "resnet18@0.25", 1);
  ASSERT_EQ(iqnet({"gen-data", "--config", cfg.string()}).code, 0);
  const auto good = iqnet({"convert-info", "--data", (dir / "desk.cxiq").string()});
  ASSERT_EQ(good.code, 0) << good.err;
  EXPECT_NE(good.out.find("600 frames"), std::string::npos);
  EXPECT_NE(good.out.find("QAM16"), std::string::npos);

  auto bytes = slurp(dir / "desk.cxiq");
  bytes[bytes.size() / 3] ^= 0x10;
  spit(dir / "bad.cxiq", bytes);
  const auto bad = iqnet({"convert-info", "--data", (dir / "bad.cxiq").string()});
  EXPECT_EQ(bad.code, kExitData);
  EXPECT_NE(bad.err.find("CRC"), std::string::npos) << bad.err;

  spit(dir / "empty.cxiq", "");
  const auto empty = iqnet({"convert-info", "--data", (dir / "empty.cxiq").string()});
  EXPECT_EQ(empty.code, kExitData);
  EXPECT_FALSE(empty.err.empty());
}

TEST(Seeds, TrialSeedsAreDistinctAndStable) {
  const auto a = trial_seeds(13, 0), b = trial_seeds(13, 1);
  EXPECT_NE(a.split, b.split);
  EXPECT_NE(a.split, a.init);
  EXPECT_NE(a.init, a.train);
  EXPECT_EQ(trial_seeds(13, 1).train, b.train);
}

}  // namespace
}  // namespace iqnet::cli
