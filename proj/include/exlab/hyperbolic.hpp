// Closed-form geometry of the upper half-plane in curvature -1 units.
//
// Everything here is a value type or a pure function. Horoball crossings are
// computed by moving the horoball to {Im w >= 1} with an isometry; there the
// geodesic is a semicircle of radius rho and all crossing data (entry/exit
// times, horocyclic length, depth profile, integrals of e^depth) are
// elementary functions of rho and the apex time.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace exlab {

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point {
  double x = 0.0;
  double y = 1.0;

  /// Throws GeometryError unless y > 0 and both coordinates are finite.
  static Point make(double x, double y);
};

/// A point of R ∪ {∞}.
class BoundaryPoint {
 public:
  BoundaryPoint() = default;
  static BoundaryPoint finite(double x);
  static BoundaryPoint infinity() { return BoundaryPoint{}; }

  bool is_infinity() const { return !value_.has_value(); }
  double value() const;  // throws on ∞

  friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;

 private:
  explicit BoundaryPoint(double x) : value_(x) {}
  std::optional<double> value_;
};

/// Real 2x2 matrix of determinant one acting by z -> (az+b)/(cz+d).
struct UnimodularMap {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static constexpr double kDetTolerance = 1e-12;

  /// Throws GeometryError when |ad - bc - 1| exceeds kDetTolerance.
  static UnimodularMap make(double a, double b, double c, double d);
  static UnimodularMap identity() { return {}; }

  Point apply(const Point& z) const;
  BoundaryPoint apply(const BoundaryPoint& r) const;
  UnimodularMap inverse() const { return {d, -b, -c, a}; }
  UnimodularMap operator*(const UnimodularMap& o) const;
};

double hyp_distance(const Point& z1, const Point& z2);

/// Unit-speed geodesic with a basepoint (time 0) and an orientation.
struct Geodesic {
  enum class Shape { kSemicircle, kVertical };

  Shape shape = Shape::kVertical;
  double center = 0.0;  // semicircle center, or foot of the vertical line
  double radius = 0.0;  // semicircle only
  Point base;
  BoundaryPoint forward;

  BoundaryPoint backward() const;
};

/// The geodesic through x0 whose forward endpoint is r.
Geodesic geodesic_through(const Point& x0, const BoundaryPoint& r);

Point point_at_time(const Geodesic& g, double t);

/// Signed time along a geodesic toward `forward`, as a Busemann function:
/// log of the height of z in the chart that sends `forward` to ∞.
/// Differences of this quantity along a geodesic ending at `forward` are
/// elapsed arclength.
double log_horoheight(const BoundaryPoint& forward, const Point& z);

/// Horoball tangent to the boundary: a Euclidean disk of the given radius
/// resting on a finite point, or {y >= size} at ∞.
struct Horoball {
  BoundaryPoint tangency;
  double size = 1.0;

  static Horoball make(const BoundaryPoint& tangency, double size);
  /// Ford horoball at p/q (assumed reduced), radius 1/(2q^2).
  static Horoball ford(long long p, long long q);
  static Horoball at_infinity(double height = 1.0) { return make(BoundaryPoint::infinity(), height); }
};

/// Time interval a geodesic spends inside a horoball. In the normalizing
/// chart the geodesic is a semicircle of radius rho; the apex is reached at
/// the midpoint of [t_in, t_out].
///
/// A geodesic that ends at the tangency point never exits (t_out = +inf);
/// one that starts there was never outside (t_in = -inf). Those are
/// terminal crossings and carry rho = +inf.
struct Crossing {
  double t_in = 0.0;
  double t_out = 0.0;
  double rho = 1.0;

  bool terminal() const;
  double t_apex() const { return 0.5 * (t_in + t_out); }
};

/// Build a crossing from its normalized radius (> 1) and apex time.
Crossing crossing_from_apex(double rho, double t_apex);

std::optional<Crossing> horoball_crossing(const Geodesic& g, const Horoball& h);

struct ExcursionLength {
  double E = 0.0;
  double max_depth = 0.0;
};

/// Horocyclic distance between entry and exit, 2*sqrt(rho^2 - 1), and the
/// deepest point reached, log(rho).
ExcursionLength excursion_length(const Crossing& cr);

/// Horocyclic distance from the entry point to the projection of the
/// geodesic's position at time T onto the horosphere. Needs t_in <= T < t_out.
double partial_excursion_length(const Crossing& cr, double T);

/// Horocyclic distance between the projections of the positions at times
/// s <= t, both inside the crossing.
double horocyclic_span(const Crossing& cr, double s, double t);

/// Depth below the horosphere at time t, or nullopt outside the crossing.
std::optional<double> depth_at_time(const Crossing& cr, double t);

/// Integral over the whole crossing of Psi_R = (2/pi) e^depth restricted to
/// depth < log R. R = +inf gives the untruncated integral.
double psi_excursion_integral(const Crossing& cr, double R);

/// Same integrand over [from, to] intersected with the crossing.
double psi_segment_integral(const Crossing& cr, double from, double to, double R);

}  // namespace exlab
