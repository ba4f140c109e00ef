#include "exlab/cli.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "exlab/ergodic.hpp"

namespace exlab::cli {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "1.0.0";
constexpr double kSixOverPi2 = 6.0 / (std::numbers::pi * std::numbers::pi);

class HelpShown : public std::exception {};

const std::vector<std::string> kCommands{"cf-stats", "geo-excursions", "volume", "ergodic-rate",
                                         "correlation", "loglaw", "census", "wordlen"};
const std::vector<std::string> kCommonKeys{"seed", "samples", "threads", "check", "bit-budget", "out", "name"};

const std::map<std::string, std::vector<std::string>>& command_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"cf-stats", {"n", "source"}},
      {"geo-excursions", {"T", "mode", "x0", "margin"}},
      {"volume", {"R"}},
      {"ergodic-rate", {"grid", "c", "mode", "x0", "margin"}},
      {"correlation", {"lags", "threshold"}},
      {"loglaw", {"T", "mode", "x0", "margin", "band-lo", "band-hi"}},
      {"census", {"grid", "c", "mode", "x0", "margin"}},
      {"wordlen", {"n"}},
  };
  return keys;
}

std::string description(const std::string& cmd) {
  static const std::map<std::string, std::string> d{
      {"cf-stats", "trimmed digit sums and Levy ratios of random continued fractions"},
      {"geo-excursions", "cusp excursions of random geodesics, per excursion and per sample"},
      {"volume", "Liouville volume of the cusp regions of depth >= log R"},
      {"ergodic-rate", "truncated cusp integrals along geodesics, normalized by T log T"},
      {"correlation", "time correlations of the deep-cusp indicator"},
      {"loglaw", "deepest cusp excursion up to time T, relative to log T"},
      {"census", "samples with two or more excursions above T (log T)^c"},
      {"wordlen", "S/T word lengths of convergent matrices"},
  };
  return d.at(cmd);
}

void add_param_option(CLI::App* s, const std::string& key, Params& p) {
  if (key == "n") {
    s->add_option("--n", p.n, "continued-fraction digits per sample")->check(CLI::PositiveNumber);
  } else if (key == "source") {
    s->add_option("--source", p.source, "digit source: dyadic (exact random real) or conditional (digit law)")
        ->check(CLI::IsMember({"dyadic", "conditional"}));
  } else if (key == "T") {
    s->add_option("--T", p.T, "time horizon")->check(CLI::Range(2.0, 1e9));
  } else if (key == "mode") {
    s->add_option("--mode", p.mode, "geodesic law: uniform01, visual-at-i (both from --x0) or liouville")
        ->check(CLI::IsMember({"uniform01", "visual-at-i", "liouville"}));
  } else if (key == "x0") {
    s->add_option("--x0", p.x0, "basepoint x,y")->expected(2)->delimiter(',');
  } else if (key == "margin") {
    s->add_option("--margin", p.margin, "extra time resolved past the horizon")->check(CLI::NonNegativeNumber);
  } else if (key == "R") {
    s->add_option("--R", p.R, "depth levels R (comma separated)")->delimiter(',')->check(CLI::Range(1.0, 1e300));
  } else if (key == "grid") {
    s->add_option("--grid", p.grid, "time horizons (comma separated)")->delimiter(',')->check(CLI::Range(2.0, 1e9));
  } else if (key == "c") {
    s->add_option("--c", p.c, "exponent c");
  } else if (key == "lags") {
    s->add_option("--lags", p.lags, "time lags (comma separated)")->delimiter(',')->check(CLI::Range(0.0, 1e6));
  } else if (key == "threshold") {
    s->add_option("--threshold", p.threshold, "cusp depth defining the indicator")->check(CLI::NonNegativeNumber);
  } else if (key == "band-lo") {
    s->add_option("--band-lo", p.band_lo, "check: lower end for the 90th percentile");
  } else if (key == "band-hi") {
    s->add_option("--band-hi", p.band_hi, "check: upper end for the 90th percentile");
  }
}

struct Cli {
  std::unique_ptr<CLI::App> app;
  RunConfig cfg;
  std::optional<std::uint64_t> seed;
};

std::unique_ptr<Cli> build() {
  auto c = std::make_unique<Cli>();
  c->app = std::make_unique<CLI::App>("Cusp excursions of geodesics on the modular surface", "exlab");
  CLI::App& app = *c->app;
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  Params& p = c->cfg.params;
  for (const auto& cmd : kCommands) {
    CLI::App* s = app.add_subcommand(cmd, description(cmd));
    s->add_option("--seed", c->seed, "master seed (fallback: EXLAB_SEED, then OS entropy)");
    s->add_option("--samples", p.samples, "number of samples")
        ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
    s->add_option("--threads", c->cfg.threads, "worker threads, 0 for all available")->check(CLI::NonNegativeNumber);
    s->add_flag("--check", c->cfg.check, "exit with status 2 when a check fails");
    s->add_option("--bit-budget", p.bit_budget, "random bits per sample, 0 to size from the horizon");
    s->add_option("--out", c->cfg.out_dir, "output directory");
    s->add_option("--name", c->cfg.name, "output file stem (default: the command)");
    s->add_option("--config", c->cfg.config_path, "JSON config with one section per command");
    for (const auto& key : command_keys().at(cmd)) add_param_option(s, key, p);
  }
  return c;
}

void parse_into(Cli& c, const std::vector<std::string>& args) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    c.app->parse(rev);
  } catch (const CLI::Success& e) {
    c.app->exit(e);
    throw HelpShown();
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
}

bool is_key_of(const std::string& cmd, const std::string& key) {
  const auto& k = command_keys().at(cmd);
  return std::find(kCommonKeys.begin(), kCommonKeys.end(), key) != kCommonKeys.end() ||
         std::find(k.begin(), k.end(), key) != k.end();
}

std::string scalar_token(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_number(v.get<double>());
  throw UsageError("config value for '" + where + "' must be a number or string");
}

// Extra arguments for the config file's section of this command.
std::vector<std::string> config_tokens(const std::string& path, const std::string& cmd, CLI::App* sub) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file must hold a JSON object of command sections");
  std::vector<std::string> out;
  for (const auto& [section, body] : doc.items()) {
    if (std::find(kCommands.begin(), kCommands.end(), section) == kCommands.end())
      throw UsageError("unknown config section '" + section + "'");
    if (!body.is_object()) throw UsageError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!is_key_of(section, key)) throw UsageError("unknown config key '" + section + "." + key + "'");
      if (section != cmd || sub->get_option("--" + key)->count() > 0) continue;
      const std::string where = section + "." + key;
      if (key == "check") {
        if (!value.is_boolean()) throw UsageError("config value for '" + where + "' must be true or false");
        if (value.get<bool>()) out.push_back("--check");
        continue;
      }
      out.push_back("--" + key);
      if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar_token(v, where);
        out.push_back(joined);
      } else {
        out.push_back(scalar_token(value, where));
      }
    }
  }
  return out;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int thread_count(const RunConfig& cfg) { return cfg.threads > 0 ? cfg.threads : omp_get_max_threads(); }

SampleSpec sample_spec(const RunConfig& cfg) {
  SampleSpec s;
  const Params& p = cfg.params;
  s.mode = p.mode == "liouville" ? SampleMode::kLiouville
           : p.mode == "visual-at-i" ? SampleMode::kVisualAtI
                                     : SampleMode::kUniform01;
  s.x0 = Point{p.x0.at(0), p.x0.at(1)};
  s.bit_budget = p.bit_budget;
  s.margin = p.margin;
  return s;
}

json param_json(const RunConfig& cfg, const std::string& key) {
  const Params& p = cfg.params;
  if (key == "seed") return cfg.seed;
  if (key == "samples") return p.samples;
  if (key == "threads") return cfg.threads;
  if (key == "check") return cfg.check;
  if (key == "bit-budget") return p.bit_budget;
  if (key == "out") return cfg.out_dir;
  if (key == "name") return cfg.name;
  if (key == "n") return p.n;
  if (key == "source") return p.source;
  if (key == "T") return p.T;
  if (key == "mode") return p.mode;
  if (key == "x0") return p.x0;
  if (key == "margin") return p.margin;
  if (key == "R") return p.R;
  if (key == "grid") return p.grid;
  if (key == "c") return p.c;
  if (key == "lags") return p.lags;
  if (key == "threshold") return p.threshold;
  if (key == "band-lo") return p.band_lo;
  if (key == "band-hi") return p.band_hi;
  throw std::logic_error("no such key " + key);
}

// --- tabular output ----------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

std::string to_gp(const Table& t) {
  std::string out = "#";
  for (const auto& h : t.header) out += ' ' + h;
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ' ';
      out += r[i];
    }
    out += '\n';
  }
  return out;
}

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }
std::string num(std::uint64_t x, int) { return std::to_string(x); }

struct Outcome {
  Table csv;
  std::vector<std::pair<std::string, Table>> extra;  // suffix -> table
  Table plot;
  std::vector<CheckResult> checks;
  std::vector<SampleFailure> failures;
  json details = json::object();
};

template <class T>
std::vector<T> compact(std::vector<std::optional<T>>& slots) {
  std::vector<T> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

// --- commands ----------------------------------------------------------------

Outcome cmd_cf_stats(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  o.csv.header = {"sample", "n", "S", "a_max", "trimmed_ratio", "levy_ratio"};
  std::vector<std::optional<std::vector<std::string>>> rows(p.samples);
  std::vector<double> levy(p.samples, std::nan(""));
  o.failures = for_each_sample(p.samples, thread_count(cfg), cfg.seed, [&](std::size_t i) {
    const std::uint64_t s = sample_seed(cfg.seed, i);
    CFStream cf = p.source == "conditional"
                      ? CFStream::from_conditional_law(s)
                      : cf_from_bits(s, p.n, p.bit_budget ? p.bit_budget : default_bit_budget(p.n));
    const TrimmedStat t = trimmed_sum(cf, p.n);
    levy[i] = levy_ratio(cf, p.n);
    rows[i] = std::vector<std::string>{num(i), num(p.n), t.sum.get_str(), t.a_max.get_str(), num(t.ratio), num(levy[i])};
  });
  check_failure_rate(o.failures, p.samples);
  o.csv.rows = compact(rows);
  o.plot.header = {"sample", "trimmed_ratio", "levy_ratio"};
  for (const auto& r : o.csv.rows) o.plot.rows.push_back({r[0], r[4], r[5]});

  const double levy_const = std::numbers::pi * std::numbers::pi / (12.0 * std::numbers::ln2);
  std::size_t within = 0;
  for (double l : levy) within += std::fabs(l - levy_const) <= 0.012;
  const bool pass = static_cast<double>(within) >= 0.95 * static_cast<double>(p.samples);
  o.checks.push_back({"levy", pass,
                      std::to_string(within) + " of " + std::to_string(p.samples) +
                          " samples within 0.012 of pi^2/(12 ln 2); need 95%"});
  return o;
}

Outcome cmd_geo_excursions(const RunConfig& cfg) {
  const Params& p = cfg.params;
  const SampleSpec spec = sample_spec(cfg);
  Outcome o;
  o.csv.header = {"sample", "index", "p", "q", "t_in", "t_out", "E", "depth", "complete"};
  Table summary;
  summary.header = {"sample", "seed", "T", "N", "E_total", "E_max", "trimmed_ratio", "max_depth_ratio"};
  std::vector<std::optional<std::vector<std::vector<std::string>>>> rows(p.samples);
  std::vector<std::optional<RunResult>> results(p.samples);
  o.failures = for_each_sample(p.samples, thread_count(cfg), cfg.seed, [&](std::size_t i) {
    const std::uint64_t s = sample_seed(cfg.seed, i);
    const auto records = sample_records(s, spec, p.T);
    std::vector<std::vector<std::string>> mine;
    for (std::size_t k = 0; k < records.size(); ++k) {
      const auto& r = records[k];
      mine.push_back({num(i), num(k), r.p.get_str(), r.q.get_str(), num(r.t_in), num(r.t_out), num(r.E),
                      num(r.max_depth), r.complete ? "1" : "0"});
    }
    rows[i] = std::move(mine);
    results[i] = summarize_records(records, p.T, {}, s);
  });
  check_failure_rate(o.failures, p.samples);
  std::vector<double> trimmed;
  for (std::size_t i = 0; i < p.samples; ++i) {
    if (!results[i]) continue;
    for (auto& r : *rows[i]) o.csv.rows.push_back(std::move(r));
    const RunResult& r = *results[i];
    summary.rows.push_back({num(i), num(r.seed, 0), num(r.T), num(r.N), num(r.E_total), num(r.E_max),
                            num(r.trimmed_ratio), num(r.max_depth_ratio)});
    trimmed.push_back(r.trimmed_ratio);
  }
  o.plot = summary;
  o.extra.emplace_back(".summary.csv", std::move(summary));
  const Summary s = summarize(trimmed);
  o.details["trimmed_ratio"] = {{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"mean", s.mean}};
  const bool pass = s.median >= 0.75 * kSixOverPi2 && s.median <= 1.25 * kSixOverPi2;
  o.checks.push_back({"trimmed-ratio", pass, "median " + num(s.median) + ", band [0.75, 1.25] x 6/pi^2"});
  return o;
}

Outcome cmd_volume(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  o.csv.header = {"R", "samples", "hits", "fraction", "half_width", "R_times_fraction"};
  const double cx = 3.0 / std::numbers::pi;
  bool pass = true;
  std::string worst;
  for (double R : p.R) {
    const VolumeEstimate v = volume_estimate(cfg.seed, R, p.samples);
    const double scaled = R * v.fraction;
    o.csv.rows.push_back({num(R), num(v.samples), num(v.hits), num(v.fraction), num(v.half_width), num(scaled)});
    if (std::fabs(scaled - cx) > 0.02) {
      pass = false;
      worst += (worst.empty() ? "" : "; ") + ("R=" + num(R) + " gives " + num(scaled));
    }
  }
  o.plot = o.csv;
  o.checks.push_back({"cusp-volume", pass, pass ? "every R: |R f - 3/pi| <= 0.02" : worst});
  return o;
}

Outcome cmd_ergodic_rate(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  const auto rows = ergodic_rate_check(cfg.seed, p.samples, p.grid, p.c, sample_spec(cfg), thread_count(cfg), &o.failures);
  o.csv.header = {"T", "n", "R", "mean", "median", "sd", "ci_lo", "ci_hi", "target", "invariant_mean"};
  for (const auto& r : rows) {
    // Flow invariance fixes the mean at (6/pi^2) T ln R for Liouville starts.
    const double inv = kSixOverPi2 * std::log(r.R) / std::log(r.T);
    o.csv.rows.push_back({num(r.T), std::to_string(r.n), num(r.R), num(r.normalized.mean), num(r.normalized.median),
                          num(r.normalized.sd), num(r.normalized.ci_lo), num(r.normalized.ci_hi), num(kSixOverPi2),
                          num(inv)});
  }
  o.plot = o.csv;
  const double first = std::fabs(rows.front().normalized.mean - kSixOverPi2);
  const double last = std::fabs(rows.back().normalized.mean - kSixOverPi2);
  o.checks.push_back({"drift", rows.size() > 1 && last < first,
                      "distance to 6/pi^2: " + num(first) + " at first T, " + num(last) + " at last T"});
  return o;
}

Outcome cmd_correlation(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  const MixingEstimate m = correlation_decay(cfg.seed, p.samples, p.threshold, p.lags, thread_count(cfg));
  o.csv.header = {"lag", "covariance", "se", "shuffled", "shuffled_se", "shuffled_z", "residual"};
  double cov1 = std::nan(""), cov10 = std::nan("");
  bool control = true;
  for (const auto& l : m.lags) {
    const double z = l.shuffled_se > 0.0 ? l.shuffled / l.shuffled_se : 0.0;
    o.csv.rows.push_back({num(l.lag), num(l.covariance), num(l.se), num(l.shuffled), num(l.shuffled_se), num(z),
                          num(l.residual)});
    if (l.lag == 1.0) cov1 = l.covariance;
    if (l.lag == 10.0) cov10 = l.covariance;
    control = control && std::fabs(z) < 3.0;
  }
  o.plot = o.csv;
  Table raw;
  raw.header = {"sample", "f0"};
  for (double lag : p.lags) raw.header.push_back("f_" + num(lag));
  for (std::size_t i = 0; i < m.f0.size(); ++i) {
    std::vector<std::string> r{num(i), std::to_string(m.f0[i])};
    for (const auto& col : m.ft) r.push_back(std::to_string(col[i]));
    raw.rows.push_back(std::move(r));
  }
  o.extra.emplace_back(".raw.csv", std::move(raw));
  o.details["fit"] = {{"K", m.K}, {"rho", m.rho}, {"model", "K t exp(-rho t)"}};
  o.details["occupancy"] = m.occupancy;
  const bool have = std::isfinite(cov1) && std::isfinite(cov10);
  o.checks.push_back({"decay", have && cov10 < cov1 / 4.0,
                      have ? "cov(10) = " + num(cov10) + ", cov(1)/4 = " + num(cov1 / 4.0) : "needs lags 1 and 10"});
  o.checks.push_back({"shuffled-control", control, "every |z| of the shuffled pairing below 3"});
  return o;
}

Outcome cmd_loglaw(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  MonteCarloSpec mc;
  mc.master_seed = cfg.seed;
  mc.samples = p.samples;
  mc.horizons = {p.T};
  mc.sample = sample_spec(cfg);
  mc.threads = thread_count(cfg);
  const StatSeries s = monte_carlo(mc).front();
  o.failures = s.failures;
  const LogLawResult l = loglaw_statistic(s);
  o.csv.header = {"sample", "seed", "max_depth", "ratio"};
  for (std::size_t k = 0; k < s.results.size(); ++k) {
    const RunResult& r = s.results[k];
    o.csv.rows.push_back({num(s.indices[k]), num(r.seed, 0), num(r.max_depth), num(r.max_depth_ratio)});
  }
  o.plot = o.csv;
  o.details["quantiles"] = {{"q10", l.q10}, {"median", l.median}, {"q90", l.q90}, {"max", l.max}};
  const bool nonneg = std::all_of(l.ratios.begin(), l.ratios.end(), [](double r) { return r >= 0.0; });
  o.checks.push_back({"q90-band", nonneg && l.q90 >= p.band_lo && l.q90 <= p.band_hi,
                      "90th percentile " + num(l.q90) + ", band [" + num(p.band_lo) + ", " + num(p.band_hi) + "]"});
  return o;
}

Outcome cmd_census(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  MonteCarloSpec mc;
  mc.master_seed = cfg.seed;
  mc.samples = p.samples;
  mc.horizons = p.grid;
  mc.sample = sample_spec(cfg);
  mc.threads = thread_count(cfg);
  const auto series = monte_carlo(mc);
  o.failures = series.front().failures;
  o.csv.header = {"T", "c", "threshold", "samples", "two_or_more", "fraction"};
  std::vector<double> fr;
  for (const auto& s : series) {
    const CensusResult c = large_excursion_census(s, p.c);
    const auto two = static_cast<std::size_t>(std::count_if(c.counts.begin(), c.counts.end(), [](std::size_t k) { return k >= 2; }));
    o.csv.rows.push_back({num(s.T), num(p.c), num(c.threshold), num(c.counts.size()), num(two), num(c.fraction_two_or_more)});
    fr.push_back(c.fraction_two_or_more);
  }
  o.plot = o.csv;
  if (!(p.c > 0.5)) o.details["warning"] = "c <= 1/2 lies outside the regime where two large excursions are rare";
  bool decreasing = fr.size() > 1;
  for (std::size_t k = 1; k < fr.size(); ++k) decreasing = decreasing && fr[k] < fr[k - 1];
  o.checks.push_back({"single-large", fr.front() <= 0.05 && decreasing,
                      "fraction " + num(fr.front()) + " at the first T (need <= 0.05), strictly decreasing: " +
                          (decreasing ? "yes" : "no")});
  return o;
}

Outcome cmd_wordlen(const RunConfig& cfg) {
  const Params& p = cfg.params;
  Outcome o;
  o.csv.header = {"sample", "n", "digit_sum", "word_length", "remultiplied", "two_log_q", "translation_length"};
  std::vector<std::optional<std::vector<std::string>>> rows(p.samples);
  std::vector<std::uint8_t> ok(p.samples, 1);
  o.failures = for_each_sample(p.samples, thread_count(cfg), cfg.seed, [&](std::size_t i) {
    CFStream cf = cf_from_bits(sample_seed(cfg.seed, i), p.n, p.bit_budget ? p.bit_budget : default_bit_budget(p.n));
    ConvergentIterator it;
    mpz_class sum = 0;
    for (std::size_t k = 1; k <= p.n; ++k) {
      sum += cf.digit(k);
      it.advance(cf.digit(k));
    }
    const IntMatrix m = convergent_matrix(it.p_prev(), it.q_prev(), it.p(), it.q());
    const WordDecomposition w = word_decompose(m);
    const bool same = w.evaluate() == m;
    double tl = std::nan("");
    if (abs(m.trace()) > 2) tl = translation_length(m).exact;
    ok[i] = same && w.length <= 2 * sum + 6;
    rows[i] = std::vector<std::string>{num(i), num(p.n), sum.get_str(), w.length.get_str(), same ? "1" : "0",
                                       num(2.0 * log_abs(it.q())), num(tl)};
  });
  check_failure_rate(o.failures, p.samples);
  o.csv.rows = compact(rows);
  o.plot = o.csv;
  const auto good = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
  o.checks.push_back({"word-bounds", good == p.samples,
                      std::to_string(good) + " of " + std::to_string(p.samples) +
                          " words re-multiply exactly with length <= 2 (digit sum) + 6"});
  return o;
}

Outcome dispatch(const RunConfig& cfg) {
  const std::string& c = cfg.command;
  if (c == "cf-stats") return cmd_cf_stats(cfg);
  if (c == "geo-excursions") return cmd_geo_excursions(cfg);
  if (c == "volume") return cmd_volume(cfg);
  if (c == "ergodic-rate") return cmd_ergodic_rate(cfg);
  if (c == "correlation") return cmd_correlation(cfg);
  if (c == "loglaw") return cmd_loglaw(cfg);
  if (c == "census") return cmd_census(cfg);
  if (c == "wordlen") return cmd_wordlen(cfg);
  throw UsageError("unknown command " + c);
}

OutputFile write_output(const std::filesystem::path& dir, const std::string& file, const std::string& bytes) {
  const auto path = dir / file;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return {file, sha256_hex(bytes), bytes.size()};
}

}  // namespace

bool RunManifest::checks_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

RunConfig parse_config(const std::vector<std::string>& args) {
  auto first = build();
  parse_into(*first, args);
  CLI::App* sub = first->app->get_subcommands().front();
  const std::string cmd = sub->get_name();

  std::vector<std::string> merged = args;
  if (!first->cfg.config_path.empty()) {
    const auto extra = config_tokens(first->cfg.config_path, cmd, sub);
    merged.insert(merged.end(), extra.begin(), extra.end());
  }
  auto second = build();
  parse_into(*second, merged);
  RunConfig cfg = second->cfg;
  cfg.command = cmd;
  CLI::App* s2 = second->app->get_subcommands().front();

  if (first->seed) {
    cfg.seed = *first->seed;
    cfg.seed_source = "flag";
  } else if (second->seed) {
    cfg.seed = *second->seed;
    cfg.seed_source = "config";
  } else if (const char* env = std::getenv("EXLAB_SEED"); env && *env) {
    const std::string text(env);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw UsageError("EXLAB_SEED must be a 64-bit unsigned integer, got '" + text + "'");
    cfg.seed = v;
    cfg.seed_source = "env";
  } else {
    cfg.seed = entropy_seed();
    cfg.seed_source = "entropy";
  }

  Params& p = cfg.params;
  if (s2->get_option("--samples")->count() == 0) {
    if (cmd == "volume") p.samples = 1000000;
    if (cmd == "correlation") p.samples = 100000;
  }
  if (p.grid.empty()) {
    if (cmd == "ergodic-rate") p.grid = {1000.0, 3000.0, 10000.0};
    if (cmd == "census") p.grid = {1000.0, 10000.0};
  }
  if (p.x0.size() != 2 || !(p.x0[1] > 0.0)) throw UsageError("--x0: the basepoint needs y > 0");
  if (cmd == "ergodic-rate" && !(p.c > 0.5 && p.c < 2.0 / 3.0)) throw UsageError("--c: must lie in (1/2, 2/3)");
  if (cmd == "correlation" && p.samples < 2) throw UsageError("--samples: correlation needs at least 2");
  if (p.R.empty()) throw UsageError("--R: needs at least one level");
  if (p.lags.empty()) throw UsageError("--lags: needs at least one lag");
  if (cfg.name.empty()) cfg.name = cmd;
  if (cfg.name.find('/') != std::string::npos) throw UsageError("--name: must not contain '/'");
  return cfg;
}

RunManifest execute(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const int threads = thread_count(cfg);
  omp_set_num_threads(threads);
  Outcome o = dispatch(cfg);

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.files.push_back(write_output(dir, cfg.name + ".csv", to_csv(o.csv)));
  for (const auto& [suffix, table] : o.extra) m.files.push_back(write_output(dir, cfg.name + suffix, to_csv(table)));
  m.files.push_back(write_output(dir, cfg.name + ".gp.dat", to_gp(o.plot)));
  m.checks = o.checks;
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json config;
  for (const auto& k : kCommonKeys) config[k] = param_json(cfg, k);
  for (const auto& k : command_keys().at(cfg.command)) config[k] = param_json(cfg, k);
  json doc;
  doc["tool"] = "exlab";
  doc["version"] = kVersion;
  doc["command"] = cfg.command;
  doc["config"] = config;
  doc["seed"] = cfg.seed;
  doc["seed_source"] = cfg.seed_source;
  doc["threads_used"] = threads;
  doc["duration_seconds"] = m.seconds;
  doc["checks_enabled"] = cfg.check;
  doc["checks"] = json::array();
  for (const auto& c : m.checks) doc["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  doc["failures"] = json::array();
  for (const auto& f : o.failures) doc["failures"].push_back({{"index", f.index}, {"seed", f.seed}, {"message", f.message}});
  doc["details"] = o.details;
  doc["files"] = json::array();
  for (const auto& f : m.files) doc["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  write_output(dir, cfg.name + ".manifest.json", doc.dump(2) + "\n");
  return m;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpShown&) {
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for the options.\n";
    return 1;
  }
  try {
    const RunManifest m = execute(cfg);
    for (const auto& c : m.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    std::cout << "seed " << cfg.seed << " (" << cfg.seed_source << "), outputs in " << cfg.out_dir << '\n';
    return cfg.check && !m.checks_pass() ? 2 : 0;
  } catch (const MonteCarloAborted& e) {
    std::cerr << "error: " << e.what() << "\nhint: raise --bit-budget if the failures report missing digits.\n";
  } catch (const InsufficientPrecision& e) {
    std::cerr << "error: " << e.what() << "\nhint: raise --bit-budget.\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace exlab::cli
