// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// fails. argv[1] (or EXLAB_CLI) names the exlab binary for the
// reproducibility run; an optional argv[2] like "2,11" runs a subset.
#include <omp.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "exlab/ergodic.hpp"

using namespace exlab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLevy = kPi * kPi / (12.0 * std::numbers::ln2);
constexpr double kDV = 1.0 / std::numbers::ln2;
constexpr double kSixOverPi2 = 6.0 / (kPi * kPi);
constexpr double kCX = 3.0 / kPi;
constexpr std::uint64_t kMaster = 20260301;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string cli_path;

// --- 1 -----------------------------------------------------------------------
Verdict levy_constant() {
  const std::size_t seeds = 100, n = 100000;
  std::vector<double> ratio(seeds, std::nan(""));
  const auto failures = for_each_sample(seeds, 0, kMaster + 1, [&](std::size_t i) {
    auto cf = cf_from_bits(sample_seed(kMaster + 1, i), n, default_bit_budget(n));
    ratio[i] = levy_ratio(cf, n);
  });
  const auto within = std::count_if(ratio.begin(), ratio.end(), [](double r) { return std::fabs(r - kLevy) <= 0.012; });
  return {within >= 95, std::to_string(within) + "/100 seeds within 0.012 of " + fmt(kLevy, 7) + " (n = 1e5, exact dyadic digits; " +
                            std::to_string(failures.size()) + " failures; median " + fmt(quantile(ratio, 0.5)) + ")"};
}

// --- 2 -----------------------------------------------------------------------
Verdict diamond_vaaler() {
  const std::size_t seeds = 200;
  std::vector<double> big(seeds, std::nan("")), small(seeds, std::nan(""));
  const auto failures = for_each_sample(seeds, 0, kMaster + 2, [&](std::size_t i) {
    auto cf = CFStream::from_conditional_law(sample_seed(kMaster + 2, i));
    small[i] = trimmed_sum(cf, 1000).ratio;
    big[i] = trimmed_sum(cf, 1000000).ratio;
  });
  const double med = quantile(big, 0.5);
  std::size_t closer = 0;
  for (std::size_t i = 0; i < seeds; ++i) closer += std::fabs(big[i] - kDV) < std::fabs(small[i] - kDV);
  const bool band = med >= 0.85 * kDV && med <= 1.15 * kDV;
  const bool approach = static_cast<double>(closer) >= 0.8 * static_cast<double>(seeds);
  return {band && approach && failures.empty(),
          "median ratio at n = 1e6 " + fmt(med) + " (band " + fmt(0.85 * kDV) + ".." + fmt(1.15 * kDV) + "); " +
              std::to_string(closer) + "/200 seeds closer at 1e6 than at 1e3 (need 160)"};
}

// --- 3 -----------------------------------------------------------------------
Verdict dictionary() {
  const std::size_t seeds = 100, wanted = 1000;
  std::size_t cases = 0, hold = 0, literal_cases = 0, literal_hold = 0, missing = 0;
  double worst = 0.0;
  std::map<std::uint64_t, std::size_t> bad_by_digit;
  for (std::size_t s = 0; s < seeds; ++s) {
    auto cf = CFStream::from_bits(BitSource(sample_seed(kMaster + 3, s), default_bit_budget(6000)));
    // Index N of the wanted-th digit >= 2, and q_N.
    ConvergentIterator it;
    std::size_t found = 0, N = 0;
    while (found < wanted) {
      ++N;
      cf.ensure(N);
      found += cf.digit(N) >= 2;
      it.advance(cf.digit(N));
    }
    const double T = 2.0 * log_abs(it.q()) + 10.0;
    const auto records = enumerate_excursions(cf, {0.0, 1.0}, T, {.vertical = true});
    std::map<std::pair<mpz_class, mpz_class>, const ExcursionRecord*> by_pq;
    for (const auto& r : records) by_pq[{r.p, r.q}] = &r;

    auto E_at = [&](const mpz_class& p, const mpz_class& q) -> std::optional<double> {
      auto hit = by_pq.find({p, q});
      if (hit == by_pq.end() || !hit->second->complete) return std::nullopt;
      return hit->second->E;
    };
    ConvergentIterator jt;
    std::size_t seen = 0;
    for (std::size_t n = 1; seen < wanted; ++n) {
      const mpz_class p_prev = jt.p(), q_prev = jt.q();
      jt.advance(cf.digit(n));
      const double a = cf.digit_double(n);
      if (cf.digit(n) < 2) continue;
      ++seen;
      // Horoball at p_{n-1}/q_{n-1} against a_n.
      if (auto E = E_at(p_prev, q_prev)) {
        ++cases;
        const bool ok = *E > a - 1.0 - 1e-6 && *E < a + 1.0 + 1e-6;
        hold += ok;
        if (!ok) ++bad_by_digit[std::min<std::uint64_t>(cf.digit_u64(n), 10)];
        worst = std::max(worst, std::fabs(*E - a));
      } else {
        ++missing;
      }
      // The literal pairing: horoball at p_n/q_n against a_n.
      if (auto E = E_at(jt.p(), jt.q())) {
        ++literal_cases;
        literal_hold += *E > a - 1.0 - 1e-6 && *E < a + 1.0 + 1e-6;
      }
    }
  }
  std::string by;
  for (const auto& [a, k] : bad_by_digit) by += (by.empty() ? "" : ", ") + (a == 10 ? std::string(">=10") : std::to_string(a)) + ":" + std::to_string(k);
  const double rate = 1.0 - static_cast<double>(hold) / static_cast<double>(std::max<std::size_t>(cases, 1));
  return {hold == cases && missing == 0 && cases == seeds * wanted,
          std::to_string(hold) + "/" + std::to_string(cases) + " cases inside a_n +- 1 (violation rate " + fmt(rate, 4) +
              ", max |E - a_n| " + fmt(worst, 4) + ", sharp bound 2; violations by digit {" + by + "}; " +
              std::to_string(missing) + " missing); literal p_n/q_n pairing holds in " + std::to_string(literal_hold) + "/" +
              std::to_string(literal_cases)};
}

// --- 4 -----------------------------------------------------------------------
Verdict psi_comparison() {
  const int K = 240;
  double worst = 0.0, at_top = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double rho = std::pow(10.0, 6.0 * k / K);
    const Crossing cr = crossing_from_apex(rho, 0.0);
    const double diff = excursion_length(cr).E - psi_excursion_integral(cr, HUGE_VAL);
    worst = std::max(worst, std::fabs(diff));
    if (k == K) at_top = diff;
  }
  return {worst < 2.0 && std::fabs(at_top - 4.0 / kPi) <= 0.01,
          "max |E - integral| " + fmt(worst) + " over " + std::to_string(K + 1) + " log-spaced rho; at rho = 1e6 the difference is " +
              fmt(at_top, 8) + " vs 4/pi = " + fmt(4.0 / kPi, 8)};
}

// --- 5 -----------------------------------------------------------------------
Verdict cusp_volume() {
  bool pass = true;
  std::string detail;
  for (double R : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    const VolumeEstimate v = volume_estimate(kMaster + 5, R, 1000000);
    const double scaled = R * v.fraction;
    pass = pass && std::fabs(scaled - kCX) <= 0.02;
    detail += (detail.empty() ? "" : ", ") + ("R=" + fmt(R) + ": " + fmt(scaled));
  }
  return {pass, "R * estimate (1e6 samples) " + detail + "; target 3/pi = " + fmt(kCX)};
}

// --- 6 -----------------------------------------------------------------------
Verdict main_theorem() {
  MonteCarloSpec mc;
  mc.master_seed = kMaster + 6;
  mc.samples = 100;
  mc.horizons = {1000.0, 5000.0};
  const auto s = monte_carlo(mc);
  const auto a = s[0].aggregates().at("trimmed_ratio"), b = s[1].aggregates().at("trimmed_ratio");
  const bool band = b.median >= 0.75 * kSixOverPi2 && b.median <= 1.25 * kSixOverPi2;
  const bool shrink = (b.q3 - b.q1) < (a.q3 - a.q1);
  return {band && shrink, "median trimmed ratio at T = 5000 " + fmt(b.median) + " (band " + fmt(0.75 * kSixOverPi2) + ".." +
                              fmt(1.25 * kSixOverPi2) + "); IQR " + fmt(b.q3 - b.q1) + " at 5000 vs " + fmt(a.q3 - a.q1) +
                              " at 1000"};
}

// --- 7 -----------------------------------------------------------------------
Verdict single_large() {
  MonteCarloSpec mc;
  mc.master_seed = kMaster + 7;
  mc.samples = 1000;
  mc.horizons = {1000.0, 10000.0};
  const auto s = monte_carlo(mc);
  const double f3 = large_excursion_census(s[0], 0.6).fraction_two_or_more;
  const double f4 = large_excursion_census(s[1], 0.6).fraction_two_or_more;
  return {f3 <= 0.05 && f4 < f3, "fraction with >= 2 excursions above T (ln T)^0.6: " + fmt(f3) + " at T = 1e3, " + fmt(f4) +
                                     " at T = 1e4 (1000 seeds)"};
}

// --- 8 -----------------------------------------------------------------------
Verdict excursion_rate_check() {
  MonteCarloSpec mc;
  mc.master_seed = kMaster + 8;
  mc.samples = 100;
  mc.horizons = {10000.0, 20000.0};
  const auto s = monte_carlo(mc);
  const RateEstimate a = excursion_rate(s[0]), b = excursion_rate(s[1]);
  const double drift = std::fabs(b.eta - a.eta) / a.eta;
  return {a.relative_spread <= 0.05 && drift <= 0.02,
          "sd/mean of N/T at 1e4 " + fmt(a.relative_spread, 4) + "; eta " + fmt(a.eta) + " -> " + fmt(b.eta) + " at 2e4 (drift " +
              fmt(100.0 * drift, 3) + "%)"};
}

// --- 9 -----------------------------------------------------------------------
Verdict variance() {
  const auto v = variance_growth(kMaster + 9, 1500, 8.0, {100.0, 316.2, 1000.0, 3162.3, 10000.0});
  std::string rows;
  for (const auto& r : v.rows) rows += (rows.empty() ? "" : ", ") + ("T=" + fmt(r.T, 5) + ": " + fmt(r.variance, 5));
  return {v.slope <= 1.2, "log-log slope " + fmt(v.slope, 4) + " (1500 Liouville starts; variances " + rows + ")"};
}

// --- 10 ----------------------------------------------------------------------
Verdict correlation() {
  const auto m = correlation_decay(kMaster + 10, 100000, std::log(2.0), {0, 1, 2, 3, 5, 7, 10, 15, 20});
  double c1 = 0, c10 = 0, zmax = 0;
  for (const auto& l : m.lags) {
    if (l.lag == 1.0) c1 = l.covariance;
    if (l.lag == 10.0) c10 = l.covariance;
    zmax = std::max(zmax, std::fabs(l.shuffled / l.shuffled_se));
  }
  return {c10 < c1 / 4.0 && zmax < 3.0, "cov(1) " + fmt(c1) + ", cov(10) " + fmt(c10) + "; shuffled max |z| " + fmt(zmax, 3) +
                                            "; fit K " + fmt(m.K, 4) + ", rho " + fmt(m.rho, 4)};
}

// --- 11 ----------------------------------------------------------------------
IntMatrix random_sl2z(std::mt19937_64& g) {
  std::uniform_int_distribution<int> len(1, 40), pw(-1000, 1000), coin(0, 3);
  IntMatrix m;
  const int L = len(g);
  for (int i = 0; i < L; ++i) m = coin(g) ? m * IntMatrix::T_power(pw(g)) : m * IntMatrix::S();
  return m;
}

std::uint64_t heavy_digit(std::mt19937_64& g) {
  // Gauss-like tail, occasionally enormous.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = std::floor(1.0 / u(g));
  return x > 1e18 ? 1 : static_cast<std::uint64_t>(std::max(1.0, x));
}

Verdict exactness() {
  std::mt19937_64 g(kMaster + 11);
  gmp_randclass r(gmp_randinit_default);
  r.seed(kMaster + 11);
  std::size_t bad_det = 0, bad_rt = 0, bad_ford = 0, bad_word = 0, tangent = 0;
  const int cases = 10000;
  for (int c = 0; c < cases; ++c) {
    std::vector<std::uint64_t> digits(1 + g() % 80);
    for (auto& d : digits) d = heavy_digit(g);
    // Determinant identity at every index.
    ConvergentIterator it;
    bool ok = true;
    for (std::size_t n = 0; n < digits.size(); ++n) {
      it.advance(digits[n]);
      const mpz_class det = it.p() * it.q_prev() - it.p_prev() * it.q();
      ok = ok && det == (n % 2 == 0 ? 1 : -1);
    }
    bad_det += !ok;

    // Round trips: rational -> digits -> rational, and digits -> rational -> digits.
    const mpz_class den = r.get_z_bits(1 + g() % 300) + 1;
    mpq_class x(r.get_z_range(1000 * den), den);
    x.canonicalize();
    auto cf = cf_from_rational(x.get_num(), x.get_den());
    std::size_t len = 0;
    while (cf.try_ensure(len + 1)) ++len;
    bool rt = len == 0 ? x == mpq_class(mpz_class(static_cast<long>(cf.integer_part()))) : cf_value(cf, len) == x;
    auto back = CFStream::from_digits(digits);
    const mpq_class v = cf_value(back, digits.size());
    // Canonical form: a trailing 1 merges into the digit before it.
    std::vector<std::uint64_t> canon = digits;
    long long whole = 0;
    if (canon.back() == 1) {
      canon.pop_back();
      if (canon.empty()) whole = 1;
      else ++canon.back();
    }
    auto again = cf_from_rational(v.get_num(), v.get_den());
    rt = rt && again.integer_part() == whole && again.try_ensure(canon.size()) && !again.try_ensure(canon.size() + 1);
    for (std::size_t i = 0; i < canon.size() && rt; ++i) rt = again.digit_is_small(i + 1) && again.digit_u64(i + 1) == canon[i];
    bad_rt += !rt;

    // Ford tangency iff |pq' - p'q| = 1; never overlapping.
    mpz_class a, b, a2, b2;
    const IntMatrix fm = random_sl2z(g);
    if (c % 2 == 0 && fm.c != 0 && fm.d != 0) {
      // Columns of an SL(2,Z) matrix are Farey neighbours.
      a = fm.a, b = fm.c, a2 = fm.b, b2 = fm.d;
      if (b < 0) a = -a, b = -b;
      if (b2 < 0) a2 = -a2, b2 = -b2;
    } else {
      b = r.get_z_range(50) + 1, b2 = r.get_z_range(50) + 1;
      a = r.get_z_range(200) - 100, a2 = r.get_z_range(200) - 100;
    }
    mpz_class gg;
    mpz_gcd(gg.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    a /= gg, b /= gg;
    mpz_gcd(gg.get_mpz_t(), a2.get_mpz_t(), b2.get_mpz_t());
    a2 /= gg, b2 /= gg;
    if (a * b2 != a2 * b) {
      const int sep = ford_separation(a, b, a2, b2);
      const bool unit = abs(a * b2 - a2 * b) == 1;
      tangent += unit;
      bad_ford += sep < 0 || (sep == 0) != unit;
    }

    // Word re-multiplication.
    const IntMatrix m = random_sl2z(g);
    bad_word += !(word_decompose(m).evaluate() == m);
  }
  const bool pass = bad_det + bad_rt + bad_ford + bad_word == 0;
  return {pass, "failures over 1e4 cases each: determinant " + std::to_string(bad_det) + ", round trip " + std::to_string(bad_rt) +
                    ", Ford " + std::to_string(bad_ford) + " (" + std::to_string(tangent) + " tangent pairs), words " +
                    std::to_string(bad_word)};
}

// --- 12 ----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict reproducibility() {
  if (cli_path.empty()) return {false, "no exlab binary given (argv[1] or EXLAB_CLI)"};
  const std::vector<std::pair<std::string, std::string>> cases{
      {"cf-stats", "--n 5000 --samples 20"},
      {"geo-excursions", "--T 1000 --samples 10"},
      {"volume", "--samples 100000"},
      {"ergodic-rate", "--grid 300,1000 --samples 20"},
      {"correlation", "--samples 5000"},
      {"loglaw", "--T 1000 --samples 20"},
      {"census", "--grid 300,1000 --samples 50"},
      {"wordlen", "--n 300 --samples 20"},
  };
  const int max_threads = omp_get_max_threads();
  // On a single-core machine the parallel path is still exercised with 4 threads.
  std::vector<int> counts{1, 1, max_threads, max_threads};
  if (max_threads < 4) counts.insert(counts.end(), {4, 4});
  const fs::path root = fs::temp_directory_path() / ("exlab_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::size_t compared = 0;
  std::string bad;
  for (const auto& [cmd, args] : cases) {
    std::map<std::string, std::string> ref;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const fs::path out = root / (cmd + "_" + std::to_string(k));
      fs::create_directories(out);
      const std::string line = "'" + cli_path + "' " + cmd + " " + args + " --seed 4242 --threads " + std::to_string(counts[k]) +
                               " --out '" + out.string() + "' >/dev/null 2>&1";
      const int raw = std::system(line.c_str());
      if (!WIFEXITED(raw) || WEXITSTATUS(raw) != 0) {
        bad += " " + cmd + " (exit)";
        break;
      }
      for (const auto& e : fs::directory_iterator(out)) {
        const std::string name = e.path().filename().string();
        if (name.find(".manifest.json") != std::string::npos) continue;
        auto [it, fresh] = ref.emplace(name, slurp(e.path()));
        if (!fresh) {
          ++compared;
          if (it->second != slurp(e.path())) bad += " " + cmd + "/" + name;
        }
      }
    }
  }
  fs::remove_all(root);
  std::string threads;
  for (int t : counts) threads += (threads.empty() ? "" : ",") + std::to_string(t);
  return {bad.empty() && compared > 0, "8 subcommands, thread counts {" + threads + "}, " + std::to_string(compared) +
                                           " file comparisons; mismatches:" + (bad.empty() ? " none" : bad)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) cli_path = argv[1];
  else if (const char* e = std::getenv("EXLAB_CLI")) cli_path = e;

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"Levy constant", levy_constant},
      {"trimmed digit sums", diamond_vaaler},
      {"excursion/digit dictionary", dictionary},
      {"psi-integral comparison", psi_comparison},
      {"cusp volume", cusp_volume},
      {"trimmed geodesic ratio", main_theorem},
      {"single large excursion", single_large},
      {"excursion rate", excursion_rate_check},
      {"variance growth", variance},
      {"correlation decay", correlation},
      {"exactness suite", exactness},
      {"reproducibility", reproducibility},
  };
  std::vector<bool> selected(criteria.size(), argc <= 2);
  if (argc > 2) {
    std::stringstream list(argv[2]);
    for (std::string item; std::getline(list, item, ',');) {
      const std::size_t k = std::stoul(item);
      if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
