#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <optional>
#include <set>
#include <utility>

#include "exlab/modular.hpp"

namespace exlab {
namespace {

constexpr double kLevy = std::numbers::pi * std::numbers::pi / (12.0 * std::numbers::ln2);
constexpr std::size_t kLookahead = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  ExcursionRecord::Kind kind;
  mpz_class p, q;
  Crossing crossing;
};

// Digit access that turns every way of running dry into InsufficientPrecision.
class DigitFeed {
 public:
  DigitFeed(CFStream& cf, std::size_t estimate) : cf_(cf), estimate_(estimate) {}

  // True when digit j exists; false only past the end of an exact rational.
  bool have(std::size_t j) {
    if (j <= cf_.size()) return true;
    try {
      if (cf_.try_ensure(j)) return true;
    } catch (const BudgetExhausted& e) {
      throw InsufficientPrecision(std::max(j, estimate_), e.produced());
    }
    if (cf_.source() == CFSource::kRational) return false;
    throw InsufficientPrecision(std::max(j, estimate_), cf_.size());
  }

  // Complete quotient x_j = [a_j; a_{j+1}, ...]; +inf past the end.
  double complete_quotient(std::size_t j) {
    if (!have(j)) return kInf;
    std::size_t last = j;
    while (last < j + kLookahead && have(last + 1)) ++last;
    double x = cf_.digit_double(last);
    for (std::size_t i = last; i-- > j;) x = cf_.digit_double(i) + 1.0 / x;
    return x;
  }

  CFStream& cf() { return cf_; }

 private:
  CFStream& cf_;
  std::size_t estimate_;
};

double clipped_length(const Crossing& cr, double from, double to) {
  if (cr.terminal()) return 0.0;
  const double full = excursion_length(cr).E;
  if (from <= cr.t_in && to >= cr.t_out) return full;
  const double head = from > cr.t_in ? partial_excursion_length(cr, from) : 0.0;
  const double tail = to < cr.t_out ? partial_excursion_length(cr, to) : full;
  return std::max(0.0, tail - head);
}

double clipped_depth(const Crossing& cr, double from, double to) {
  if (!cr.terminal()) {
    const double ta = cr.t_apex();
    if (ta >= from && ta <= to) return std::log(cr.rho);
  }
  const double d0 = depth_at_time(cr, from).value_or(0.0);
  const double d1 = depth_at_time(cr, to).value_or(0.0);
  return std::max(d0, d1);
}

std::optional<ExcursionRecord> clip(const Crossing& cr, double T) {
  if (!(cr.t_out > 0.0) || !(cr.t_in < T)) return std::nullopt;
  ExcursionRecord rec;
  rec.crossing = cr;
  rec.t_in = std::max(cr.t_in, 0.0);
  rec.t_out = std::min(cr.t_out, T);
  rec.complete = cr.t_in >= 0.0 && cr.t_out <= T;
  rec.E = rec.complete ? excursion_length(cr).E : clipped_length(cr, rec.t_in, rec.t_out);
  rec.max_depth = clipped_depth(cr, rec.t_in, rec.t_out);
  return rec;
}

}  // namespace

std::vector<ExcursionRecord> restrict_to_horizon(const std::vector<ExcursionRecord>& records, double T) {
  std::vector<ExcursionRecord> out;
  for (const auto& r : records) {
    auto c = clip(r.crossing, T);
    if (!c) continue;
    c->kind = r.kind;
    c->p = r.p;
    c->q = r.q;
    out.push_back(std::move(*c));
  }
  return out;
}

std::size_t digits_for_horizon(double T, double margin) {
  return static_cast<std::size_t>(std::ceil(std::max(0.0, T + margin) / (2.0 * kLevy))) + kLookahead;
}

std::uint64_t geodesic_bit_budget(double T, double margin) {
  return static_cast<std::uint64_t>(std::ceil(1.6 * std::max(0.0, T + margin))) + 512;
}

std::vector<ExcursionRecord> enumerate_excursions(CFStream& alpha, const Point& x0_in, double T,
                                                  const EnumerationOptions& opt) {
  if (!(x0_in.y > 0.0)) throw GeometryError("basepoint must lie in the upper half-plane");
  const long long a0 = alpha.integer_part();

  // Normalized endpoint a in [0, 1) to double precision.
  double a_d;
  {
    ConvergentIterator it;
    for (std::size_t i = 1; mpz_sizeinbase(it.q().get_mpz_t(), 2) <= 60; ++i) {
      bool ok;
      try {
        ok = alpha.try_ensure(i);
      } catch (const BudgetExhausted& e) {
        throw InsufficientPrecision(std::max(i, digits_for_horizon(T, opt.margin)), e.produced());
      }
      if (!ok) {
        if (alpha.source() != CFSource::kRational)
          throw InsufficientPrecision(std::max(i, digits_for_horizon(T, opt.margin)), alpha.size());
        break;
      }
      it.advance(alpha.digit(i));
    }
    a_d = ratio_to_double(it.p(), it.q());
  }
  const Point x0 = opt.vertical ? Point{a_d, x0_in.y} : Point{x0_in.x - static_cast<double>(a0), x0_in.y};
  const BoundaryPoint fwd = BoundaryPoint::finite(a_d);
  const Geodesic g = geodesic_through(x0, fwd);
  const bool vertical = g.shape == Geodesic::Shape::kVertical;
  const double B = vertical ? kInf : g.backward().value();
  const double log_h = log_horoheight(fwd, x0);
  const double horizon = T + opt.margin;

  const auto estimate = static_cast<std::size_t>(
                            std::ceil(std::max(0.0, horizon + log_h) / (2.0 * kLevy))) + kLookahead;
  DigitFeed feed(alpha, estimate);
  // Demand the expected need up front so shortfalls surface before any work.
  feed.have(estimate);

  std::vector<Candidate> found;
  std::set<std::pair<long long, long long>> covered;  // small p/q settled exactly
  // Below this denominator every horoball is tested directly; the bound keeps
  // balls near the backward endpoint at negative times for low basepoints.
  const long long small_limit = std::min<long long>(
      100000, std::max<long long>(static_cast<long long>(std::max<std::size_t>(opt.farey_max, 1)),
                                  static_cast<long long>(std::ceil(2.0 / std::sqrt(x0.y)))));
  auto cover = [&](const mpz_class& p, const mpz_class& q) {
    if (q <= static_cast<long>(small_limit) && mpz_fits_slong_p(p.get_mpz_t())) covered.emplace(p.get_si(), q.get_si());
  };

  if (auto cr = horoball_crossing(g, Horoball::at_infinity())) {
    found.push_back({ExcursionRecord::Kind::kInfinity, 1, 0, *cr});
  }

  // Convergent charts v = (q' z - p') / (q z - p) with (p'/q', p/q) consecutive.
  ConvergentIterator it;
  for (std::size_t n = 0;; ++n) {
    const mpz_class &p = it.p(), &q = it.q(), &pp = it.p_prev(), &qp = it.q_prev();
    const double log_q = log_abs(q);
    const double r = ratio_to_double(qp, q);
    const double x = feed.complete_quotient(n + 1);
    cover(p, q);

    if (std::isinf(x)) {
      // alpha = p/q exactly: the geodesic ends in this cusp.
      const double t_in = 2.0 * log_q - log_h;
      found.push_back({ExcursionRecord::Kind::kConvergent, p, q, Crossing{t_in, kInf, kInf}});
      break;
    }

    double vb;
    if (vertical) {
      vb = r;
    } else if (mpz_sizeinbase(q.get_mpz_t(), 2) < 40) {
      vb = (qp.get_d() * B - pp.get_d()) / (q.get_d() * B - p.get_d());
    } else {
      vb = r * (B - ratio_to_double(pp, qp)) / (B - ratio_to_double(p, q));
    }
    const double log_theta = -(log_q + std::log(x + r));  // log|q alpha - p|
    const double rho = 0.5 * std::fabs(vb + x);
    if (rho > 1.0) {
      const double t_apex = -std::log(2.0 * rho) - 2.0 * log_theta - log_h;
      found.push_back({ExcursionRecord::Kind::kConvergent, p, q, crossing_from_apex(rho, t_apex)});
    }

    // Intermediate fractions sit at v = -k, k = 1 .. a_{n+1} - 1, with horoballs of diameter 1.
    if (feed.have(n + 1) && feed.cf().digit_is_small(n + 1)) {
      const std::uint64_t a = feed.cf().digit_u64(n + 1);
      auto test = [&](std::uint64_t k) {
        const double kd = static_cast<double>(k);
        const double rk = rho / (std::fabs(x - kd) * std::fabs(vb + kd));
        const mpz_class pk = pp + k * p, qk = qp + k * q;
        cover(pk, qk);
        if (!(rk > 1.0)) return false;
        const double t_apex = -std::log(2.0 * rk) - 2.0 * (log_theta + std::log(std::fabs(x - kd))) - log_h;
        found.push_back({ExcursionRecord::Kind::kIntermediate, pk, qk, crossing_from_apex(rk, t_apex)});
        return true;
      };
      std::uint64_t lo = 1;
      while (lo < a && test(lo)) ++lo;
      std::uint64_t hi = a - 1;
      while (hi > lo && test(hi)) --hi;
      // Near the backward endpoint the profile is not concave; probe around it.
      if (vb < -0.5) {
        const double centre = std::nearbyint(-vb);
        for (double k = std::max(1.0, centre - 2.0); k <= centre + 2.0; ++k) {
          const auto ku = static_cast<std::uint64_t>(k);
          if (ku > lo && ku < hi) test(ku);
        }
      }
      // Small intermediates are settled here even when untested.
      for (std::uint64_t k = lo; k <= hi && mpz_class(qp + k * q) <= static_cast<long>(small_limit); ++k) cover(pp + k * p, qp + k * q);
    }

    if (2.0 * log_q - log_h > horizon) break;
    if (!feed.have(n + 1)) break;
    it.advance(feed.cf().digit(n + 1));
  }

  // Farey horoballs with small denominator, tested in plain double geometry.
  for (long long qq = 1; qq <= small_limit; ++qq) {
    const double rad = 1.0 / (2.0 * static_cast<double>(qq) * static_cast<double>(qq));
    std::vector<std::pair<double, double>> bands;
    if (vertical) {
      bands.emplace_back(a_d - rad, a_d + rad);
    } else {
      const double c = g.center, R0 = g.radius;
      const double inner = std::sqrt(std::max(0.0, R0 * R0 - 2.0 * R0 * rad));
      const double outer = std::sqrt(R0 * R0 + 2.0 * R0 * rad);
      bands.emplace_back(c + inner, c + outer);
      bands.emplace_back(c - outer, c - inner);
    }
    for (auto [lo, hi] : bands) {
      const double pad = 1e-9 + 8.0 * std::numeric_limits<double>::epsilon() * (std::fabs(lo) + std::fabs(hi));
      const double plo = std::ceil((lo - pad) * qq), phi = std::floor((hi + pad) * qq);
      if (std::fabs(plo) > 1e15 || std::fabs(phi) > 1e15) continue;
      for (auto pz = static_cast<long long>(plo); pz <= static_cast<long long>(phi); ++pz) {
        if (std::gcd(pz, qq) != 1 || covered.count({pz, qq})) continue;
        covered.emplace(pz, qq);
        if (auto cr = horoball_crossing(g, Horoball::ford(pz, qq))) {
          found.push_back({ExcursionRecord::Kind::kFarey, mpz_class(static_cast<long>(pz)), mpz_class(static_cast<long>(qq)), *cr});
        }
      }
    }
  }

  std::vector<ExcursionRecord> out;
  for (auto& c : found) {
    auto rec = clip(c.crossing, T);
    if (!rec) continue;
    rec->kind = c.kind;
    if (opt.keep_rationals) {
      rec->p = c.p + mpz_class(static_cast<long>(a0)) * c.q;
      rec->q = c.q;
      if (c.q == 0) rec->p = 1;
    }
    out.push_back(std::move(*rec));
  }
  std::sort(out.begin(), out.end(),
            [](const ExcursionRecord& u, const ExcursionRecord& v) { return u.crossing.t_in < v.crossing.t_in; });
  return out;
}

}  // namespace exlab
