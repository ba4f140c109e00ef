// The modular surface SL(2,Z)\H^2 with its maximal cusp neighborhood: the
// Ford horoballs (radius 1/(2q^2) at p/q, {y >= 1} at ∞).
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "exlab/continued_fraction.hpp"
#include "exlab/hyperbolic.hpp"
#include "exlab/words.hpp"

namespace exlab {

/// Not enough digits of the endpoint for the requested horizon.
class InsufficientPrecision : public std::runtime_error {
 public:
  InsufficientPrecision(std::size_t needed, std::size_t available);
  std::size_t needed() const { return needed_; }
  std::size_t available() const { return available_; }

 private:
  std::size_t needed_;
  std::size_t available_;
};

struct ReducedPoint {
  Point z0;      // in F = {|x| <= 1/2, |z| >= 1}
  IntMatrix word;  // z = word . z0
};

/// Alternate translations and inversions until the point lies in F.
ReducedPoint reduce_to_fundamental_domain(const Point& z);

/// log of the reduced height when it is >= 1, else 0.
double cusp_depth(const Point& z);

enum class EndpointMode { kUniform01, kVisualAtI };

/// A random endpoint as an exact digit stream plus its integer part.
struct Endpoint {
  CFStream cf;
  double approx = 0.0;  // nearest double, filled by sample_endpoint
};

/// uniform01: a dyadic uniform real in (0, 1). visual-at-i: x = tan(pi (u - 1/2))
/// (Cauchy, the visual measure from i); the double's reliable fractional bits are
/// a fixed prefix and fresh random bits follow.
Endpoint sample_endpoint(std::uint64_t seed, EndpointMode mode, std::uint64_t bit_budget);

/// The dyadic endpoint extending the binary expansion of x (its reliable bits,
/// then random ones).
Endpoint endpoint_from_double(double x, std::uint64_t seed, std::uint64_t bit_budget);

struct LiouvilleSample {
  Point z;
  double theta = 0.0;  // Euclidean direction of the unit tangent vector
};

/// Normalized Liouville measure on T^1 X, with the basepoint in F.
LiouvilleSample liouville_sample(std::uint64_t seed);

/// Geodesic through a Liouville sample: its forward endpoint as a double.
double forward_endpoint(const LiouvilleSample& s);

struct ExcursionRecord {
  enum class Kind { kInfinity, kConvergent, kIntermediate, kFarey };

  Kind kind = Kind::kInfinity;
  mpz_class p, q;  // tangency p/q; q = 0 for ∞
  Crossing crossing;
  double t_in = 0.0, t_out = 0.0;  // crossing clipped to [0, T]
  double E = 0.0;
  double max_depth = 0.0;  // deepest point within [0, T]
  bool complete = false;   // whole crossing inside [0, T]

  double rho() const { return crossing.rho; }
};

struct EnumerationOptions {
  bool vertical = false;  // ray straight down to alpha from height x0.y
  std::size_t farey_max = 100;
  double margin = 10.0;
  bool keep_rationals = true;  // store p, q (can be thousands of digits)
};

/// Digits needed to resolve every horoball up to time T + margin.
std::size_t digits_for_horizon(double T, double margin = 10.0);
std::uint64_t geodesic_bit_budget(double T, double margin = 10.0);

/// Every Ford horoball whose interior the geodesic from x0 toward alpha meets
/// during [0, T], ordered by entry time. Throws InsufficientPrecision when the
/// stream cannot supply enough digits.
std::vector<ExcursionRecord> enumerate_excursions(CFStream& alpha, const Point& x0, double T,
                                                  const EnumerationOptions& opt = {});

/// The same records as if enumerated with the shorter horizon T.
std::vector<ExcursionRecord> restrict_to_horizon(const std::vector<ExcursionRecord>& records, double T);

/// Exact Ford tangency test: the horoballs at p/q and p'/q' never overlap,
/// and touch iff |pq' - p'q| = 1. Returns the sign of
/// (p/q - p'/q')^2 - 4 r r' as -1, 0 or 1 (r = 1/(2q^2)).
int ford_separation(const mpz_class& p, const mpz_class& q, const mpz_class& p2, const mpz_class& q2);

struct VolumeEstimate {
  double fraction = 0.0;
  double half_width = 0.0;  // 95% binomial (Wilson)
  std::size_t hits = 0;
  std::size_t samples = 0;
};

/// Fraction of Liouville samples with cusp depth >= log R.
VolumeEstimate volume_estimate(std::uint64_t seed, double R, std::size_t samples);

/// Per-sample seed: a mixing hash of (master, index).
std::uint64_t sample_seed(std::uint64_t master, std::uint64_t index);

}  // namespace exlab
