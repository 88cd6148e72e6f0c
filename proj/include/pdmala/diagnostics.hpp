#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pdmala/samplers.hpp"

namespace pdmala {

/// Effective sample size n / (1 + 2 sum rho_k) with the autocovariance sum
/// truncated by Geyer's initial monotone positive sequence of lag pairs.
/// The estimator is documented here because absolute ESS values depend on
/// it. Result clamped to (0, n]. Throws ConstantSeries for flat input.
inline double ess(const std::vector<double>& series) {
  const size_t n = series.size();
  if (n < 100) throw InsufficientSamples("ess: need at least 100 samples");

  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) throw ConstantSeries("ess: series is constant");

  double mean = 0.0;
  for (const double v : series) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> centered(n);
  for (size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;

  const auto autocov = [&](size_t lag) {
    double s = 0.0;
    for (size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
    return s / static_cast<double>(n);
  };

  const double c0 = autocov(0);
  if (!(c0 > 0.0)) throw ConstantSeries("ess: series is constant");

  // tau = -1 + 2 * sum of pair sums (rho_{2m} + rho_{2m+1}), kept while
  // positive and forced monotone nonincreasing.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  const size_t max_pairs = n / 2;
  for (size_t m = 0; m < max_pairs; ++m) {
    const size_t k0 = 2 * m, k1 = 2 * m + 1;
    double pair = autocov(k0) / c0;
    if (k1 < n) pair += autocov(k1) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1e-12);
  const double raw = static_cast<double>(n) / tau;
  return std::clamp(raw, std::numeric_limits<double>::min(), static_cast<double>(n));
}

/// Per-chain ESS statistics in the shape of the benchmark tables: per
/// parameter ESS, their minimum/median/maximum, the acceptance rate, the
/// sampling-loop wall time, and min ESS per second. Parameters whose series
/// is constant get NaN ("missing") and are skipped by the order statistics.
struct EssReport {
  Vector per_param_ess;
  double min = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  double acceptance_rate = 0.0;
  double wall_time_s = 0.0;
  double min_ess_per_s = std::numeric_limits<double>::quiet_NaN();
};

inline EssReport make_ess_report(const ChainTrace& trace, int burn_in = 0) {
  const long n_total = trace.samples.rows();
  if (burn_in < 0 || burn_in >= n_total) throw BadConfig("make_ess_report: bad burn_in");
  const long n = n_total - burn_in;
  const Eigen::Index d = trace.samples.cols();

  EssReport report;
  report.per_param_ess.resize(d);
  std::vector<double> series(static_cast<size_t>(n));
  std::vector<double> finite_ess;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (long i = 0; i < n; ++i) series[static_cast<size_t>(i)] = trace.samples(burn_in + i, j);
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
      value = ess(series);
      finite_ess.push_back(value);
    } catch (const ConstantSeries&) {
      // reported as missing
    }
    report.per_param_ess[j] = value;
  }

  if (!finite_ess.empty()) {
    std::sort(finite_ess.begin(), finite_ess.end());
    const size_t m = finite_ess.size();
    report.min = finite_ess.front();
    report.max = finite_ess.back();
    report.median = m % 2 == 1 ? finite_ess[m / 2] : 0.5 * (finite_ess[m / 2 - 1] + finite_ess[m / 2]);
  }

  long n_acc = 0;
  for (long i = burn_in; i < n_total; ++i) n_acc += trace.accepted[static_cast<size_t>(i)];
  report.acceptance_rate = static_cast<double>(n_acc) / static_cast<double>(n);
  report.wall_time_s = trace.wall_time_s;
  if (report.wall_time_s > 0.0) report.min_ess_per_s = report.min / report.wall_time_s;
  return report;
}

/// Mean and standard error (sample sd / sqrt(R)) of each chain statistic
/// over R replicate chains. Standard errors are NaN ("missing") when R = 1.
struct ReplicateSummary {
  int n_replicates = 0;
  double ess_min_mean = 0, ess_min_se = 0;
  double ess_med_mean = 0, ess_med_se = 0;
  double ess_max_mean = 0, ess_max_se = 0;
  double accept_mean = 0, accept_se = 0;
  double cpu_s_mean = 0, cpu_s_se = 0;
  double min_ess_per_s_mean = 0, min_ess_per_s_se = 0;
};

namespace detail {
inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  const size_t r = v.size();
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(r);
  if (r < 2) return {mean, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(r - 1));
  return {mean, sd / std::sqrt(static_cast<double>(r))};
}
}  // namespace detail

inline ReplicateSummary summarize(const std::vector<ChainTrace>& traces, int burn_in = 0) {
  if (traces.empty()) throw EmptyInput("summarize: no traces");
  std::vector<double> mins, meds, maxs, accs, cpus, rates;
  for (const auto& t : traces) {
    const EssReport r = make_ess_report(t, burn_in);
    mins.push_back(r.min);
    meds.push_back(r.median);
    maxs.push_back(r.max);
    accs.push_back(r.acceptance_rate);
    cpus.push_back(r.wall_time_s);
    rates.push_back(r.min_ess_per_s);
  }
  ReplicateSummary s;
  s.n_replicates = static_cast<int>(traces.size());
  std::tie(s.ess_min_mean, s.ess_min_se) = detail::mean_se(mins);
  std::tie(s.ess_med_mean, s.ess_med_se) = detail::mean_se(meds);
  std::tie(s.ess_max_mean, s.ess_max_se) = detail::mean_se(maxs);
  std::tie(s.accept_mean, s.accept_se) = detail::mean_se(accs);
  std::tie(s.cpu_s_mean, s.cpu_s_se) = detail::mean_se(cpus);
  std::tie(s.min_ess_per_s_mean, s.min_ess_per_s_se) = detail::mean_se(rates);
  return s;
}

inline std::string summary_csv_header() {
  return "dataset,method,ess_min_mean,ess_min_se,ess_med_mean,ess_med_se,"
         "ess_max_mean,ess_max_se,cpu_s,min_ess_per_s";
}

namespace detail {
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}
}  // namespace detail

inline std::string summary_csv_row(const std::string& dataset, const std::string& method,
                                   const ReplicateSummary& s) {
  using detail::csv_num;
  std::ostringstream os;
  os << dataset << ',' << method << ',' << csv_num(s.ess_min_mean) << ',' << csv_num(s.ess_min_se)
     << ',' << csv_num(s.ess_med_mean) << ',' << csv_num(s.ess_med_se) << ','
     << csv_num(s.ess_max_mean) << ',' << csv_num(s.ess_max_se) << ',' << csv_num(s.cpu_s_mean)
     << ',' << csv_num(s.min_ess_per_s_mean);
  return os.str();
}

}  // namespace pdmala
