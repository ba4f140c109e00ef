// Per-geodesic excursion statistics and seeded Monte Carlo aggregation.
//
// A sample is fully determined by (master seed, index): its own seed is
// sample_seed(master, index) and nothing else is shared between samples, so
// parallel runs reproduce the serial reference bit for bit.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exlab/modular.hpp"

namespace exlab {

struct RunResult {
  std::uint64_t seed = 0;
  double T = 0.0;
  std::size_t N = 0;
  double E_total = 0.0;
  double E_max = 0.0;
  double trimmed_ratio = 0.0;    // (E_total - E_max) / (T ln T)
  double max_depth = 0.0;
  double max_depth_ratio = 0.0;  // max_depth / ln T
  std::map<double, double> psi_integrals;  // R -> integral of Psi_R over [0, T]
  std::vector<double> E;                   // per record, in time order
};

/// Summary of the records of one geodesic up to time T.
RunResult summarize_records(const std::vector<ExcursionRecord>& records, double T,
                            const std::vector<double>& levels, std::uint64_t seed = 0);

/// Enumerate and summarize in one step.
RunResult run_statistic(CFStream& alpha, const Point& x0, double T, const std::vector<double>& levels,
                        std::uint64_t seed = 0, const EnumerationOptions& opt = {});

/// Cusp depth at time t read off the records (0 in the thick part).
double depth_along(const std::vector<ExcursionRecord>& records, double t);

enum class SampleMode { kUniform01, kVisualAtI, kLiouville };

struct SampleSpec {
  SampleMode mode = SampleMode::kUniform01;
  Point x0{0.3, 0.97};            // ignored by kLiouville
  std::uint64_t bit_budget = 0;   // 0: sized from the horizon
  double margin = 10.0;
};

/// The geodesic of one sample, enumerated up to T.
std::vector<ExcursionRecord> sample_records(std::uint64_t seed, const SampleSpec& spec, double T);

struct SampleFailure {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string message;
};

class MonteCarloAborted : public std::runtime_error {
 public:
  MonteCarloAborted(std::vector<SampleFailure> failures, std::size_t samples);
  const std::vector<SampleFailure>& failures() const { return failures_; }

 private:
  std::vector<SampleFailure> failures_;
};

/// Run body(i) for i in [0, n). threads == 1 is a plain loop, the serial
/// reference; 0 means the OpenMP default. Exceptions are caught per index and
/// returned with the index's seed.
std::vector<SampleFailure> for_each_sample(std::size_t n, int threads, std::uint64_t master,
                                           const std::function<void(std::size_t)>& body);

/// Failures above 1% of the samples abort the run.
void check_failure_rate(const std::vector<SampleFailure>& failures, std::size_t samples);

struct Summary {
  double mean = 0.0, median = 0.0, sd = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  double q1 = 0.0, q3 = 0.0;
  std::size_t count = 0;
};

/// Compensated (Neumaier) sum in the given order.
double stable_sum(const std::vector<double>& xs);

/// Mean, median, sample sd, normal 95% CI of the mean, and quartiles.
Summary summarize(std::vector<double> xs);

/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

struct StatSeries {
  std::uint64_t master_seed = 0;
  std::size_t samples = 0;
  double T = 0.0;
  std::vector<RunResult> results;  // successful samples, index order
  std::vector<std::size_t> indices;
  std::vector<SampleFailure> failures;

  std::vector<double> column(const std::function<double(const RunResult&)>& f) const;
  std::map<std::string, Summary> aggregates() const;
};

struct MonteCarloSpec {
  std::uint64_t master_seed = 0;
  std::size_t samples = 1;
  std::vector<double> horizons{1000.0};  // each evaluated on a prefix of the same geodesic
  std::vector<double> levels;            // truncation levels R for the Psi integrals
  SampleSpec sample;
  int threads = 0;
};

/// One StatSeries per horizon.
std::vector<StatSeries> monte_carlo(const MonteCarloSpec& spec);

/// Counts of records with E >= T (ln T)^c, per sample.
struct CensusResult {
  double c = 0.0;
  double threshold = 0.0;
  std::vector<std::size_t> counts;
  double fraction_two_or_more = 0.0;
  bool outside_regime = false;  // c <= 1/2
};
CensusResult large_excursion_census(const StatSeries& series, double c);

struct RateEstimate {
  double eta = 0.0;            // mean N/T
  double relative_spread = 0.0;  // sd / mean
  std::size_t samples = 0;
};
RateEstimate excursion_rate(const StatSeries& series);

struct LogLawResult {
  std::vector<double> ratios;
  double q10 = 0.0, median = 0.0, q90 = 0.0, max = 0.0;
};
LogLawResult loglaw_statistic(const StatSeries& series);

/// n(T) = floor(k + c log2 k), k = floor(log2 T); the level is 2^n(T).
int truncation_exponent(double T, double c);

struct ErgodicRow {
  double T = 0.0;
  int n = 0;
  double R = 0.0;
  Summary normalized;  // of integral of Psi_R over [0, T] / (T ln T)
};
/// Integrals of Psi_{2^n(T)} along geodesics from x0, normalized by T ln T.
std::vector<ErgodicRow> ergodic_rate_check(std::uint64_t seed, std::size_t samples, const std::vector<double>& grid,
                                           double c, const SampleSpec& spec = {}, int threads = 0,
                                           std::vector<SampleFailure>* failures = nullptr);

struct NormCheck {
  double R = 0.0;
  Summary integral;  // of Psi_R over a unit-time Liouville segment
  double expected = 0.0;  // (6 / pi^2) ln R
};
NormCheck psi_norm_check(std::uint64_t seed, std::size_t samples, double R, int threads = 0);

struct VarianceRow {
  double T = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};
struct VarianceGrowth {
  double R = 0.0;
  std::vector<VarianceRow> rows;
  double slope = 0.0;  // least squares of log Var against log T
  double intercept = 0.0;
};
/// Variance of the integral of Psi_R over [0, T] from Liouville starts.
/// R = 0 uses the constant observable 1.
VarianceGrowth variance_growth(std::uint64_t seed, std::size_t samples, double R, const std::vector<double>& grid,
                               int threads = 0);

struct LagEstimate {
  double lag = 0.0;
  double covariance = 0.0;
  double se = 0.0;
  double shuffled = 0.0;   // the same estimator on independently paired samples
  double shuffled_se = 0.0;
  double residual = 0.0;   // log(cov) minus the fitted envelope, NaN where unfitted
};
struct MixingEstimate {
  std::vector<LagEstimate> lags;
  double occupancy = 0.0;
  double K = 0.0, rho = 0.0;  // fit of cov(t) ~ K t e^{-rho t}, t > 0
  std::vector<std::uint8_t> f0;                 // raw f at time 0
  std::vector<std::vector<std::uint8_t>> ft;    // raw f at each lag
};

/// Covariance of f(g_0 v) and f(g_t v) over Liouville-random v, where f is the
/// indicator of cusp depth >= depth_threshold.
MixingEstimate correlation_decay(std::uint64_t seed, std::size_t samples, double depth_threshold,
                                 const std::vector<double>& lags, int threads = 0);

/// Least-squares line y = a + b x; returns {a, b}.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace exlab
