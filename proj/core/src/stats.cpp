#include "iqnet/stats.hpp"

#include <cmath>
#include <limits>

namespace iqnet {

namespace {

// Continued fraction for I_x(a, b); converges quickly for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1;
  const double qam = a - 1;
  double c = 1;
  double d = 1 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < kEps) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw InputError("incomplete beta: a and b must be positive");
  if (!(x >= 0 && x <= 1)) throw InputError("incomplete beta: x must lie in [0, 1]");
  if (x == 0 || x == 1) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1) / (a + b + 2)) return front * beta_continued_fraction(a, b, x) / a;
  return 1 - front * beta_continued_fraction(b, a, 1 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw InputError("t distribution: degrees of freedom must be positive");
  if (std::isnan(t)) throw NumericError("t distribution: t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(df / 2, 0.5, df / (df + t * t));
}

MeanStd mean_std(std::span<const double> values) {
  if (values.size() < 2) throw InputError("mean_std: need at least two values");
  const double n = static_cast<double>(values.size());
  // Running mean: exact for constant input, so identical trials give std 0.
  double mean = 0;
  double k = 0;
  for (double v : values) mean += (v - mean) / ++k;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1))};
}

TTestResult ttest_unpaired(std::span<const double> a, std::span<const double> b, TTestKind kind) {
  if (a.size() < 2 || b.size() < 2) throw InputError("t-test: each sample needs at least two values");
  const auto sa = mean_std(a);
  const auto sb = mean_std(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sa.std * sa.std;
  const double vb = sb.std * sb.std;
  const double diff = sa.mean - sb.mean;

  TTestResult r;
  double se2;
  if (kind == TTestKind::kPooled) {
    r.df = na + nb - 2;
    const double pooled = ((na - 1) * va + (nb - 1) * vb) / r.df;
    se2 = pooled * (1 / na + 1 / nb);
  } else {
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    r.df = se2 > 0 ? se2 * se2 / (qa * qa / (na - 1) + qb * qb / (nb - 1)) : na + nb - 2;
  }

  if (se2 == 0) {
    if (diff == 0) return {0.0, 1.0, r.df};
    return {diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0,
            r.df};
  }
  r.t = diff / std::sqrt(se2);
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

TrialRecord to_record(const RunReport& report) {
  TrialRecord r;
  r.model = report.model;
  r.trial = report.trial;
  r.accuracy = report.overall_accuracy();
  r.params = report.params;
  r.us_per_sample = report.us_per_sample;
  for (const auto& [s, bucket] : report.per_snr) r.per_snr[s] = bucket.accuracy();
  return r;
}

TrialAggregate aggregate_trials(std::span<const RunReport> trials) {
  std::vector<TrialRecord> records;
  for (const auto& t : trials) records.push_back(to_record(t));
  return aggregate_trials(std::span<const TrialRecord>(records));
}

TrialAggregate aggregate_trials(std::span<const TrialRecord> trials) {
  if (trials.size() < 2) throw InputError("aggregate_trials: need at least two trials");
  TrialAggregate agg;
  agg.model = trials.front().model;
  agg.trials = trials.size();
  std::vector<double> overall;
  std::map<int, std::vector<double>> snr;
  for (const auto& t : trials) {
    if (t.model != agg.model) throw InputError("aggregate_trials: trials of different models (" + t.model + ")");
    overall.push_back(t.accuracy);
    for (const auto& [s, acc] : t.per_snr) snr[s].push_back(acc);
  }
  agg.overall = mean_std(overall);
  for (const auto& [s, values] : snr) {
    if (values.size() != trials.size()) {
      throw InputError("aggregate_trials: SNR " + std::to_string(s) + " missing from some trials");
    }
    agg.per_snr[s] = mean_std(values);
  }
  return agg;
}

}  // namespace iqnet
