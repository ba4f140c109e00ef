#include <omp.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "exlab/modular.hpp"

namespace exlab {

InsufficientPrecision::InsufficientPrecision(std::size_t needed, std::size_t available)
    : std::runtime_error("endpoint needs " + std::to_string(needed) + " continued-fraction digits, only " +
                         std::to_string(available) + " available (raise the bit budget)"),
      needed_(needed),
      available_(available) {}

namespace {

struct Word64 {
  std::int64_t a = 1, b = 0, c = 0, d = 1;
};

std::int64_t checked_sub_mul(std::int64_t x, std::int64_t n, std::int64_t y) {
  std::int64_t prod, out;
  if (__builtin_mul_overflow(n, y, &prod) || __builtin_sub_overflow(x, prod, &out))
    throw GeometryError("reduction word overflowed 64-bit entries");
  return out;
}

// z0 = M z; returns z0.
Point reduce64(Point z, Word64& m) {
  constexpr double kTol = 1e-14;
  for (int iter = 0; iter < 1000000; ++iter) {
    if (std::fabs(z.x) > 0.5 + kTol) {
      const double n = std::nearbyint(z.x);
      if (std::fabs(n) > 9e18) throw GeometryError("point too far out to reduce");
      const auto k = static_cast<std::int64_t>(n);
      z.x -= n;
      m.a = checked_sub_mul(m.a, k, m.c);
      m.b = checked_sub_mul(m.b, k, m.d);
      continue;
    }
    const double r2 = z.x * z.x + z.y * z.y;
    if (r2 < 1.0 - kTol) {
      z = Point{-z.x / r2, z.y / r2};
      m = Word64{-m.c, -m.d, m.a, m.b};
      continue;
    }
    return z;
  }
  throw GeometryError("fundamental-domain reduction did not terminate");
}

double uniform01(std::mt19937_64& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1p-53;
}

// Nearest double to a stream's value, from the first convergent with q > 2^40.
double approx_value(CFStream& cf) {
  ConvergentIterator it(cf.integer_part());
  for (std::size_t i = 1;; ++i) {
    if (mpz_sizeinbase(it.q().get_mpz_t(), 2) > 40) break;
    if (!cf.try_ensure(i)) break;
    it.advance(cf.digit(i));
  }
  return ratio_to_double(it.p(), it.q());
}

}  // namespace

ReducedPoint reduce_to_fundamental_domain(const Point& z) {
  Word64 m;
  const Point z0 = reduce64(z, m);
  // z = M^{-1} z0
  return {z0, IntMatrix{m.d, -m.b, -m.c, m.a}};
}

double cusp_depth(const Point& z) {
  Word64 m;
  const Point z0 = reduce64(z, m);
  return z0.y >= 1.0 ? std::log(z0.y) : 0.0;
}

Endpoint endpoint_from_double(double x, std::uint64_t seed, std::uint64_t bit_budget) {
  if (!std::isfinite(x) || std::fabs(x) > 0x1p62) throw GeometryError("endpoint out of range");
  const double a0 = std::floor(x);
  double frac = x - a0;
  const int mag = std::fabs(x) > 1.0 ? std::ilogb(x) + 1 : 0;
  const int reliable = std::max(0, 50 - mag);
  std::vector<std::uint8_t> prefix(reliable);
  for (int i = 0; i < reliable; ++i) {
    frac *= 2.0;
    prefix[i] = frac >= 1.0;
    frac -= prefix[i];
  }
  Endpoint e{CFStream::from_bits(BitSource(seed, bit_budget, std::move(prefix)), static_cast<long long>(a0)), x};
  return e;
}

Endpoint sample_endpoint(std::uint64_t seed, EndpointMode mode, std::uint64_t bit_budget) {
  if (mode == EndpointMode::kUniform01) {
    Endpoint e{CFStream::from_bits(BitSource(seed, bit_budget)), 0.0};
    e.approx = approx_value(e.cf);
    return e;
  }
  std::mt19937_64 g(seed ^ 0x9e3779b97f4a7c15ULL);
  for (;;) {
    const double x = std::tan(std::numbers::pi * (uniform01(g) - 0.5));
    if (std::fabs(x) < 0x1p62) return endpoint_from_double(x, g(), bit_budget);
  }
}

LiouvilleSample liouville_sample(std::uint64_t seed) {
  std::mt19937_64 g(seed);
  const double y_min = std::sqrt(3.0) / 2.0;
  for (;;) {
    const double x = uniform01(g) - 0.5;
    const double y = y_min / uniform01(g);  // density y_min / y^2 on [y_min, inf)
    const double theta = 2.0 * std::numbers::pi * uniform01(g);
    if (x * x + y * y < 1.0) continue;
    return {Point{x, y}, theta};
  }
}

double forward_endpoint(const LiouvilleSample& s) {
  const double c = std::cos(s.theta);
  if (c == 0.0) return HUGE_VAL;
  const double center = s.z.x + s.z.y * std::tan(s.theta);
  const double radius = s.z.y / std::fabs(c);
  return center + std::copysign(radius, c);
}

int ford_separation(const mpz_class& p, const mpz_class& q, const mpz_class& p2, const mpz_class& q2) {
  mpq_class d = mpq_class(p, q) - mpq_class(p2, q2);
  d.canonicalize();
  const mpq_class r(1, 2 * q * q), r2(1, 2 * q2 * q2);
  const int s = cmp(d * d, 4 * r * r2);
  return s > 0 ? 1 : (s < 0 ? -1 : 0);
}

VolumeEstimate volume_estimate(std::uint64_t seed, double R, std::size_t samples) {
  if (!(R >= 1.0)) throw GeometryError("volume_estimate needs R >= 1");
  if (samples == 0) throw GeometryError("volume_estimate needs at least one sample");
  const double log_r = std::log(R);
  std::size_t hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
  for (std::size_t i = 0; i < samples; ++i) {
    const LiouvilleSample s = liouville_sample(sample_seed(seed, i));
    if (s.z.y >= 1.0 && std::log(s.z.y) >= log_r) ++hits;
  }
  VolumeEstimate v;
  v.hits = hits;
  v.samples = samples;
  const double n = static_cast<double>(samples), p = hits / n, z = 1.959963984540054;
  v.fraction = p;
  v.half_width = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n);
  return v;
}

std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 of a golden-ratio stride off the master seed.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace exlab
