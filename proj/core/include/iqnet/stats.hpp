#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iqnet/train.hpp"

namespace iqnet {

/// I_x(a, b), evaluated with a modified Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

enum class TTestKind { kPooled, kWelch };

struct TTestResult {
  double t = 0;
  double p = 1;
  double df = 0;
};

/// Two-sample unpaired t-test, pooled variance by default.
/// With zero variance in both samples: equal means give t = 0, p = 1;
/// different means give t = +-infinity, p = 0.
TTestResult ttest_unpaired(std::span<const double> a, std::span<const double> b,
                           TTestKind kind = TTestKind::kPooled);

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation (n - 1)
};

/// Needs at least two values.
MeanStd mean_std(std::span<const double> values);

/// The per-trial numbers that survive in the CSV artifacts.
struct TrialRecord {
  std::string model;
  std::size_t trial = 0;
  double accuracy = 0;
  std::size_t params = 0;
  double us_per_sample = 0;
  std::map<int, double> per_snr;
};

TrialRecord to_record(const RunReport& report);

struct TrialAggregate {
  std::string model;
  std::size_t trials = 0;
  MeanStd overall;
  std::map<int, MeanStd> per_snr;
};

/// Mean and sample std of overall and per-SNR accuracy across at least two
/// trials of one model.
TrialAggregate aggregate_trials(std::span<const RunReport> trials);
TrialAggregate aggregate_trials(std::span<const TrialRecord> trials);

}  // namespace iqnet
