#include <omp.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "exlab/ergodic.hpp"

namespace exlab {

namespace {

std::string abort_message(const std::vector<SampleFailure>& failures, std::size_t samples) {
  std::ostringstream os;
  os << failures.size() << " of " << samples << " samples failed (limit 1%)";
  if (!failures.empty()) os << "; first: seed " << failures.front().seed << ": " << failures.front().message;
  return os.str();
}

}  // namespace

MonteCarloAborted::MonteCarloAborted(std::vector<SampleFailure> failures, std::size_t samples)
    : std::runtime_error(abort_message(failures, samples)), failures_(std::move(failures)) {}

std::vector<SampleFailure> for_each_sample(std::size_t n, int threads, std::uint64_t master,
                                           const std::function<void(std::size_t)>& body) {
  std::vector<std::optional<SampleFailure>> slot(n);
  auto run = [&](std::size_t i) {
    try {
      body(i);
    } catch (const std::exception& e) {
      slot[i] = SampleFailure{i, sample_seed(master, i), e.what()};
    }
  };
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    const int t = threads > 0 ? threads : omp_get_max_threads();
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
    for (long long i = 0; i < count; ++i) run(static_cast<std::size_t>(i));
  }
  std::vector<SampleFailure> out;
  for (auto& s : slot)
    if (s) out.push_back(std::move(*s));
  return out;
}

void check_failure_rate(const std::vector<SampleFailure>& failures, std::size_t samples) {
  if (static_cast<double>(failures.size()) > 0.01 * static_cast<double>(samples))
    throw MonteCarloAborted(failures, samples);
}

double stable_sum(const std::vector<double>& xs) {
  double s = 0.0, comp = 0.0;
  for (double x : xs) {
    const double t = s + x;
    comp += std::fabs(s) >= std::fabs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + comp;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::nan("");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

Summary summarize(std::vector<double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) {
    s.mean = s.median = s.sd = s.ci_lo = s.ci_hi = s.q1 = s.q3 = std::nan("");
    return s;
  }
  const double n = static_cast<double>(xs.size());
  s.mean = stable_sum(xs) / n;
  std::vector<double> dev(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
  s.sd = xs.size() > 1 ? std::sqrt(stable_sum(dev) / (n - 1.0)) : 0.0;
  const double half = 1.959963984540054 * s.sd / std::sqrt(n);
  s.ci_lo = s.mean - half;
  s.ci_hi = s.mean + half;
  std::sort(xs.begin(), xs.end());
  s.median = quantile(xs, 0.5);
  s.q1 = quantile(xs, 0.25);
  s.q3 = quantile(xs, 0.75);
  return s;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return {std::nan(""), std::nan("")};
  const double mx = stable_sum(x) / static_cast<double>(n), my = stable_sum(y) / static_cast<double>(n);
  std::vector<double> sxy(n), sxx(n);
  for (std::size_t i = 0; i < n; ++i) {
    sxy[i] = (x[i] - mx) * (y[i] - my);
    sxx[i] = (x[i] - mx) * (x[i] - mx);
  }
  const double b = stable_sum(sxy) / stable_sum(sxx);
  return {my - b * mx, b};
}

std::vector<double> StatSeries::column(const std::function<double(const RunResult&)>& f) const {
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(f(r));
  return out;
}

std::map<std::string, Summary> StatSeries::aggregates() const {
  std::map<std::string, Summary> out;
  out["N"] = summarize(column([](const RunResult& r) { return static_cast<double>(r.N); }));
  out["N_over_T"] = summarize(column([](const RunResult& r) { return static_cast<double>(r.N) / r.T; }));
  out["E_total"] = summarize(column([](const RunResult& r) { return r.E_total; }));
  out["E_max"] = summarize(column([](const RunResult& r) { return r.E_max; }));
  out["trimmed_ratio"] = summarize(column([](const RunResult& r) { return r.trimmed_ratio; }));
  out["max_depth_ratio"] = summarize(column([](const RunResult& r) { return r.max_depth_ratio; }));
  if (!results.empty()) {
    for (const auto& [R, v] : results.front().psi_integrals) {
      std::ostringstream key;
      key.precision(17);
      key << "psi_R=" << R;
      out[key.str()] = summarize(column([R = R](const RunResult& r) { return r.psi_integrals.at(R); }));
    }
  }
  return out;
}

}  // namespace exlab
