#include <gtest/gtest.h>

#include <algorithm>

#include "iqnet/artifacts.hpp"
#include "iqnet/bench.hpp"
#include "temp_dir.hpp"

namespace iqnet {
namespace {

IQDataset frames(std::size_t n) {
  auto cfg = DatasetConfig::full();
  cfg.snrs_db = {0, 10};
  cfg.frames_per_pair = (n + 21) / 22;
  auto ds = generate_dataset(cfg);
  ds.frames.resize(n);
  return ds;
}

TEST(Speed, ReportIsInternallyConsistent) {
  auto model = build<float>(ModelId::parse("resnet18@0.25"), 11, 1);
  BenchConfig cfg;
  cfg.reps = 6;
  cfg.batch = 16;
  const auto r = measure_inference(model, frames(40), cfg);
  EXPECT_EQ(r.model, "resnet18@0.25");
  EXPECT_EQ(r.reps, 6u);
  EXPECT_EQ(r.frames, 40u);
  EXPECT_EQ(r.batch, 16u);
  ASSERT_EQ(r.rep_us.size(), 6u);
  EXPECT_GT(r.min_us, 0.0);
  EXPECT_LE(r.min_us, r.median_us);
  EXPECT_LE(r.min_us, r.mean_us);
  EXPECT_EQ(r.min_us, *std::min_element(r.rep_us.begin(), r.rep_us.end()));
}

TEST(Speed, SummaryStatisticsOfRepetitions) {
  SpeedReport r;
  r.rep_us = {5, 1, 4, 2, 3, 100};
  summarize_reps(r);
  EXPECT_EQ(r.min_us, 1.0);
  EXPECT_EQ(r.median_us, 3.5);
  EXPECT_NEAR(r.mean_us, 115.0 / 6, 1e-12);
  r.rep_us = {2, 9, 4};
  summarize_reps(r);
  EXPECT_EQ(r.median_us, 4.0);
  r.rep_us.clear();
  EXPECT_THROW(summarize_reps(r), InputError);
}

TEST(Speed, BaselineNormalizesToExactlyOne) {
  std::vector<SpeedReport> reports(3);
  reports[0].model = "a";
  reports[0].median_us = 3.7;
  reports[1].model = "base";
  reports[1].median_us = 0.398;
  reports[2].model = "c";
  reports[2].median_us = 0.199;
  normalize_speeds(reports, "base");
  EXPECT_EQ(reports[1].normalized, 1.0);
  EXPECT_DOUBLE_EQ(reports[2].normalized, 0.5);
  EXPECT_DOUBLE_EQ(reports[0].normalized, 3.7 / 0.398);
  EXPECT_THROW(normalize_speeds(reports, "missing"), InputError);
}

TEST(Speed, ValidatesInput) {
  auto model = build<float>(ModelId::parse("resnet18@0.25"), 11, 1);
  BenchConfig cfg;
  IQDataset empty;
  EXPECT_THROW(measure_inference(model, empty, cfg), InputError);
  cfg.reps = 4;
  EXPECT_THROW(measure_inference(model, frames(8), cfg), ConfigError);
  cfg = {};
  cfg.warmup = 0;
  EXPECT_THROW(measure_inference(model, frames(8), cfg), ConfigError);
}

TEST(Speed, PerSampleCostIsStableWhenTheTestSetDoubles) {
  auto model = build<float>(ModelId::parse("resnet18@0.25"), 11, 2);
  BenchConfig cfg;
  cfg.reps = 7;
  cfg.batch = 32;
  const auto small = measure_inference(model, frames(96), cfg);
  const auto large = measure_inference(model, frames(192), cfg);
  const double ratio = large.median_us / small.median_us;
  EXPECT_GT(ratio, 0.8);
  EXPECT_LT(ratio, 1.2);
}

TEST(Speed, ComplexVariantIsNotCheaperThanReal) {
  const auto test_set = frames(64);
  BenchConfig cfg;
  cfg.batch = 64;
  for (const char* name : {"krzyston2020", "resnet18@0.5"}) {
    const auto id = ModelId::parse(name);
    auto real = build<float>(id, 11, 3);
    auto cplx = build<float>(id.complex_counterpart(), 11, 3);
    const auto r = measure_inference(real, test_set, cfg);
    const auto c = measure_inference(cplx, test_set, cfg);
    EXPECT_GE(c.median_us, 0.9 * r.median_us) << name;
  }
}

TEST(Params, ProfileMatchesBuiltModelsAndRatios) {
  std::vector<ModelId> ids;
  for (auto f : kAllFamilies) {
    ids.push_back({f, false, 1.0});
    ids.push_back({f, true, 1.0});
  }
  const auto rows = profile_params(ids);
  ASSERT_EQ(rows.size(), 14u);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    EXPECT_EQ(rows[i].model, ids[i].name());
    EXPECT_EQ(rows[i].params, build<float>(ids[i]).param_count());
    if (!ids[i].complex) {
      EXPECT_EQ(rows[i].ratio, 1.0);
    } else if (ids[i].family == Family::kKrzyston2020) {
      EXPECT_GT(rows[i].ratio, 1.0);
      EXPECT_LT(rows[i].ratio, 1.1);
    } else {
      EXPECT_GT(rows[i].ratio, 1.5) << ids[i].name();
      EXPECT_LE(rows[i].ratio, 2.0) << ids[i].name();
    }
  }
}

TEST(Params, CsvLayouts) {
  testutil::ScratchDir dir;
  const std::vector<ModelId> ids{ModelId::parse("resnet18"), ModelId::parse("resnet18-c")};
  write_params_csv(dir / "params.csv", profile_params(ids));
  const auto t = read_csv(dir / "params.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"model", "params", "ratio"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][0], "resnet18-c");

  SpeedReport r;
  r.model = "resnet18";
  r.batch = 256;
  r.reps = 5;
  r.rep_us = {1.25, 1.5, 1.0, 1.75, 2.0};
  summarize_reps(r);
  write_speed_csv(dir / "speed.csv", std::span<const SpeedReport>(&r, 1));
  const auto s = read_csv(dir / "speed.csv");
  EXPECT_EQ(s.header,
            (std::vector<std::string>{"model", "batch", "reps", "mean_us", "median_us", "min_us", "normalized"}));
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_EQ(parse_real(s.rows[0][4]), 1.5);
  EXPECT_EQ(parse_real(s.rows[0][3]), r.mean_us);
}

TEST(Environment, StampNamesCpuAndThreads) {
  const auto stamp = environment_stamp(3);
  EXPECT_EQ(stamp.rfind("cpu=", 0), 0u);
  EXPECT_NE(stamp.find(";threads=3"), std::string::npos);
}

}  // namespace
}  // namespace iqnet
