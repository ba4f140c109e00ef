#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>

#include "exlab/ergodic.hpp"

namespace exlab {

namespace {

double t_log_t(double T) { return T > 1.0 ? T * std::log(T) : 0.0; }

MixingEstimate fit_envelope(MixingEstimate m) {
  std::vector<double> xs, ys;
  for (const auto& l : m.lags) {
    if (l.lag > 0.0 && l.covariance > 0.0) {
      xs.push_back(l.lag);
      ys.push_back(std::log(l.covariance / l.lag));
    }
  }
  const auto [a, b] = fit_line(xs, ys);
  m.K = std::exp(a);
  m.rho = -b;
  for (auto& l : m.lags) {
    l.residual = (l.lag > 0.0 && l.covariance > 0.0 && std::isfinite(a))
                     ? std::log(l.covariance) - (a + std::log(l.lag) + b * l.lag)
                     : std::nan("");
  }
  return m;
}

// Unbiased covariance of x and y paired by index, with the standard error of
// the mean of the centred products.
std::pair<double, double> covariance(const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y,
                                     const std::vector<std::size_t>* perm = nullptr) {
  const std::size_t n = x.size();
  std::vector<double> xv(n), yv(n);
  for (std::size_t i = 0; i < n; ++i) {
    xv[i] = x[i];
    yv[i] = y[perm ? (*perm)[i] : i];
  }
  const double mx = stable_sum(xv) / static_cast<double>(n), my = stable_sum(yv) / static_cast<double>(n);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = (xv[i] - mx) * (yv[i] - my);
  const double cov = stable_sum(prod) / static_cast<double>(n - 1);
  const double mp = stable_sum(prod) / static_cast<double>(n);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = (prod[i] - mp) * (prod[i] - mp);
  const double se = std::sqrt(stable_sum(dev) / static_cast<double>(n - 1) / static_cast<double>(n));
  return {cov, se};
}

}  // namespace

double depth_along(const std::vector<ExcursionRecord>& records, double t) {
  double d = 0.0;
  for (const auto& r : records) {
    if (r.crossing.t_in > t) break;
    d = std::max(d, depth_at_time(r.crossing, t).value_or(0.0));
  }
  return d;
}

RunResult summarize_records(const std::vector<ExcursionRecord>& all, double T, const std::vector<double>& levels,
                            std::uint64_t seed) {
  const auto records = restrict_to_horizon(all, T);
  RunResult r;
  r.seed = seed;
  r.T = T;
  r.N = records.size();
  r.E.reserve(records.size());
  for (const auto& rec : records) {
    r.E.push_back(rec.E);
    r.E_max = std::max(r.E_max, rec.E);
    r.max_depth = std::max(r.max_depth, rec.max_depth);
  }
  r.E_total = stable_sum(r.E);
  const double tl = t_log_t(T);
  r.trimmed_ratio = tl > 0.0 ? (r.E_total - r.E_max) / tl : 0.0;
  r.max_depth_ratio = T > 1.0 ? r.max_depth / std::log(T) : 0.0;
  for (double R : levels) {
    std::vector<double> parts;
    parts.reserve(records.size());
    for (const auto& rec : records) parts.push_back(psi_segment_integral(rec.crossing, rec.t_in, rec.t_out, R));
    r.psi_integrals[R] = stable_sum(parts);
  }
  return r;
}

RunResult run_statistic(CFStream& alpha, const Point& x0, double T, const std::vector<double>& levels,
                        std::uint64_t seed, const EnumerationOptions& opt) {
  return summarize_records(enumerate_excursions(alpha, x0, T, opt), T, levels, seed);
}

std::vector<ExcursionRecord> sample_records(std::uint64_t seed, const SampleSpec& spec, double T) {
  const std::uint64_t budget = spec.bit_budget ? spec.bit_budget : geodesic_bit_budget(T, spec.margin);
  EnumerationOptions opt;
  opt.margin = spec.margin;
  switch (spec.mode) {
    case SampleMode::kUniform01: {
      auto e = sample_endpoint(seed, EndpointMode::kUniform01, budget);
      return enumerate_excursions(e.cf, spec.x0, T, opt);
    }
    case SampleMode::kVisualAtI: {
      auto e = sample_endpoint(seed, EndpointMode::kVisualAtI, budget);
      return enumerate_excursions(e.cf, spec.x0, T, opt);
    }
    case SampleMode::kLiouville: {
      const LiouvilleSample l = liouville_sample(seed);
      auto e = endpoint_from_double(forward_endpoint(l), seed ^ 0xd1b54a32d192ed03ULL, budget);
      return enumerate_excursions(e.cf, l.z, T, opt);
    }
  }
  throw std::logic_error("unknown sample mode");
}

std::vector<StatSeries> monte_carlo(const MonteCarloSpec& spec) {
  if (spec.samples == 0) throw std::invalid_argument("monte_carlo needs at least one sample");
  if (spec.horizons.empty()) throw std::invalid_argument("monte_carlo needs a horizon");
  const double t_max = *std::max_element(spec.horizons.begin(), spec.horizons.end());
  const std::size_t h = spec.horizons.size();
  std::vector<std::vector<std::optional<RunResult>>> slots(h, std::vector<std::optional<RunResult>>(spec.samples));

  auto failures = for_each_sample(spec.samples, spec.threads, spec.master_seed, [&](std::size_t i) {
    const std::uint64_t s = sample_seed(spec.master_seed, i);
    const auto records = sample_records(s, spec.sample, t_max);
    for (std::size_t k = 0; k < h; ++k) slots[k][i] = summarize_records(records, spec.horizons[k], spec.levels, s);
  });
  check_failure_rate(failures, spec.samples);

  std::vector<StatSeries> out(h);
  for (std::size_t k = 0; k < h; ++k) {
    StatSeries& s = out[k];
    s.master_seed = spec.master_seed;
    s.samples = spec.samples;
    s.T = spec.horizons[k];
    s.failures = failures;
    for (std::size_t i = 0; i < spec.samples; ++i) {
      if (!slots[k][i]) continue;
      s.results.push_back(std::move(*slots[k][i]));
      s.indices.push_back(i);
    }
  }
  return out;
}

CensusResult large_excursion_census(const StatSeries& series, double c) {
  CensusResult out;
  out.c = c;
  out.outside_regime = !(c > 0.5);
  out.threshold = series.T * std::pow(std::log(series.T), c);
  std::size_t two = 0;
  for (const auto& r : series.results) {
    const auto k = static_cast<std::size_t>(
        std::count_if(r.E.begin(), r.E.end(), [&](double e) { return e >= out.threshold; }));
    out.counts.push_back(k);
    two += k >= 2;
  }
  out.fraction_two_or_more = out.counts.empty() ? 0.0 : static_cast<double>(two) / static_cast<double>(out.counts.size());
  return out;
}

RateEstimate excursion_rate(const StatSeries& series) {
  if (series.results.empty()) throw std::invalid_argument("excursion_rate needs samples");
  const Summary s = summarize(series.column([](const RunResult& r) { return static_cast<double>(r.N) / r.T; }));
  return {s.mean, s.count > 1 ? s.sd / s.mean : 0.0, s.count};
}

LogLawResult loglaw_statistic(const StatSeries& series) {
  if (series.results.empty()) throw std::invalid_argument("loglaw_statistic needs samples");
  LogLawResult out;
  out.ratios = series.column([](const RunResult& r) { return r.max_depth_ratio; });
  out.q10 = quantile(out.ratios, 0.1);
  out.median = quantile(out.ratios, 0.5);
  out.q90 = quantile(out.ratios, 0.9);
  out.max = *std::max_element(out.ratios.begin(), out.ratios.end());
  return out;
}

int truncation_exponent(double T, double c) {
  if (!(T >= 2.0)) throw std::invalid_argument("truncation schedule needs T >= 2");
  const int k = static_cast<int>(std::floor(std::log2(T)));
  return static_cast<int>(std::floor(k + c * std::log2(static_cast<double>(k))));
}

std::vector<ErgodicRow> ergodic_rate_check(std::uint64_t seed, std::size_t samples, const std::vector<double>& grid,
                                           double c, const SampleSpec& spec, int threads,
                                           std::vector<SampleFailure>* failures) {
  if (!(c > 0.5 && c < 2.0 / 3.0)) throw std::invalid_argument("schedule exponent c must lie in (1/2, 2/3)");
  MonteCarloSpec mc;
  mc.master_seed = seed;
  mc.samples = samples;
  mc.horizons = grid;
  mc.sample = spec;
  mc.threads = threads;
  std::vector<ErgodicRow> rows;
  for (double T : grid) {
    ErgodicRow row;
    row.T = T;
    row.n = truncation_exponent(T, c);
    row.R = std::ldexp(1.0, row.n);
    rows.push_back(row);
    mc.levels.push_back(row.R);
  }
  std::sort(mc.levels.begin(), mc.levels.end());
  mc.levels.erase(std::unique(mc.levels.begin(), mc.levels.end()), mc.levels.end());
  const auto series = monte_carlo(mc);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double tl = t_log_t(rows[k].T);
    rows[k].normalized = summarize(series[k].column([&](const RunResult& r) { return r.psi_integrals.at(rows[k].R) / tl; }));
  }
  if (failures && !series.empty()) *failures = series.front().failures;
  return rows;
}

NormCheck psi_norm_check(std::uint64_t seed, std::size_t samples, double R, int threads) {
  MonteCarloSpec mc;
  mc.master_seed = seed;
  mc.samples = samples;
  mc.horizons = {1.0};
  mc.levels = {R};
  mc.sample.mode = SampleMode::kLiouville;
  mc.threads = threads;
  const auto series = monte_carlo(mc);
  NormCheck out;
  out.R = R;
  out.integral = summarize(series.front().column([R](const RunResult& r) { return r.psi_integrals.at(R); }));
  out.expected = 6.0 / (std::numbers::pi * std::numbers::pi) * std::log(R);
  return out;
}

VarianceGrowth variance_growth(std::uint64_t seed, std::size_t samples, double R, const std::vector<double>& grid,
                               int threads) {
  if (grid.empty()) throw std::invalid_argument("variance_growth needs a horizon grid");
  const std::size_t h = grid.size();
  const double t_max = *std::max_element(grid.begin(), grid.end());
  std::vector<std::vector<double>> value(h, std::vector<double>(samples, std::nan("")));
  SampleSpec spec;
  spec.mode = SampleMode::kLiouville;
  auto failures = for_each_sample(samples, threads, seed, [&](std::size_t i) {
    if (R == 0.0) {
      for (std::size_t k = 0; k < h; ++k) value[k][i] = grid[k];
      return;
    }
    const auto records = sample_records(sample_seed(seed, i), spec, t_max);
    for (std::size_t k = 0; k < h; ++k) {
      std::vector<double> parts;
      for (const auto& rec : records) {
        if (rec.crossing.t_in >= grid[k]) break;
        parts.push_back(psi_segment_integral(rec.crossing, 0.0, grid[k], R));
      }
      value[k][i] = stable_sum(parts);
    }
  });
  check_failure_rate(failures, samples);

  VarianceGrowth out;
  out.R = R;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < h; ++k) {
    std::vector<double> xs;
    for (double v : value[k])
      if (!std::isnan(v)) xs.push_back(v);
    const Summary s = summarize(xs);
    const double var = s.sd * s.sd;
    out.rows.push_back({grid[k], s.mean, var});
    if (var > 0.0) {
      lx.push_back(std::log(grid[k]));
      ly.push_back(std::log(var));
    }
  }
  const auto [a, b] = lx.size() == h ? fit_line(lx, ly) : std::pair{std::nan(""), std::nan("")};
  out.intercept = a;
  out.slope = b;
  return out;
}

MixingEstimate correlation_decay(std::uint64_t seed, std::size_t samples, double depth_threshold,
                                 const std::vector<double>& lags, int threads) {
  if (samples < 2) throw std::invalid_argument("correlation_decay needs at least two samples");
  if (lags.empty()) throw std::invalid_argument("correlation_decay needs lags");
  const double t_max = std::max(*std::max_element(lags.begin(), lags.end()), 1.0);
  MixingEstimate m;
  m.f0.assign(samples, 0);
  m.ft.assign(lags.size(), std::vector<std::uint8_t>(samples, 0));
  std::vector<std::uint8_t> ok(samples, 0);
  SampleSpec spec;
  spec.mode = SampleMode::kLiouville;
  auto failures = for_each_sample(samples, threads, seed, [&](std::size_t i) {
    const auto records = sample_records(sample_seed(seed, i), spec, t_max);
    m.f0[i] = depth_along(records, 0.0) >= depth_threshold;
    for (std::size_t k = 0; k < lags.size(); ++k) m.ft[k][i] = depth_along(records, lags[k]) >= depth_threshold;
    ok[i] = 1;
  });
  check_failure_rate(failures, samples);
  if (!failures.empty()) {
    // Drop failed samples so every column stays aligned.
    std::vector<std::uint8_t> f0;
    std::vector<std::vector<std::uint8_t>> ft(lags.size());
    for (std::size_t i = 0; i < samples; ++i) {
      if (!ok[i]) continue;
      f0.push_back(m.f0[i]);
      for (std::size_t k = 0; k < lags.size(); ++k) ft[k].push_back(m.ft[k][i]);
    }
    m.f0 = std::move(f0);
    m.ft = std::move(ft);
  }
  const std::size_t n = m.f0.size();
  m.occupancy = static_cast<double>(std::accumulate(m.f0.begin(), m.f0.end(), std::size_t{0})) / static_cast<double>(n);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 g(seed ^ 0x632be59bd9b4e019ULL);
  std::shuffle(perm.begin(), perm.end(), g);

  for (std::size_t k = 0; k < lags.size(); ++k) {
    LagEstimate l;
    l.lag = lags[k];
    std::tie(l.covariance, l.se) = covariance(m.f0, m.ft[k]);
    std::tie(l.shuffled, l.shuffled_se) = covariance(m.f0, m.ft[k], &perm);
    m.lags.push_back(l);
  }
  return fit_envelope(std::move(m));
}

}  // namespace exlab
