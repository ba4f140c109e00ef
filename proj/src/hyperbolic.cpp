#include "exlab/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace exlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(cosh x) without overflow.
double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// log(sinh x) for x > 0 without overflow.
double log_sinh(double x) {
  return x + std::log1p(-std::exp(-2.0 * x)) - std::numbers::ln2;
}

// sinh(d) / (cosh(a) cosh(b)) for d >= 0, evaluated in the log domain so that
// neither cancellation nor overflow occurs.
double sinh_over_cosh2(double d, double a, double b) {
  if (d <= 0.0) return 0.0;
  return std::exp(log_sinh(d) - log_cosh(a) - log_cosh(b));
}

// gd(b) - gd(a) for the Gudermannian gd(x) = atan(sinh x), a <= b.
double gd_difference(double a, double b) {
  if (b <= a) return 0.0;
  const double ratio = std::exp(log_sinh(0.5 * (b - a)) - log_cosh(0.5 * (a + b)));
  return 2.0 * std::atan(ratio);
}

struct ChartPoint {
  double x, y;
};

// Isometry moving the horoball to {Im w >= 1}.
struct HoroChart {
  BoundaryPoint tangency;
  double size;

  ChartPoint apply(const Point& z) const {
    if (tangency.is_infinity()) return {z.x / size, z.y / size};
    const double diam = 2.0 * size;
    const double dx = z.x - tangency.value();
    const double m = dx * dx + z.y * z.y;
    return {-diam * dx / m, diam * z.y / m};
  }

  BoundaryPoint apply(const BoundaryPoint& r) const {
    if (tangency.is_infinity()) {
      return r.is_infinity() ? r : BoundaryPoint::finite(r.value() / size);
    }
    if (r.is_infinity()) return BoundaryPoint::finite(0.0);
    const double dx = r.value() - tangency.value();
    if (dx == 0.0) return BoundaryPoint::infinity();
    return BoundaryPoint::finite(-2.0 * size / dx);
  }
};

double log_horoheight_chart(const BoundaryPoint& forward, const ChartPoint& w) {
  return log_horoheight(forward, Point{w.x, w.y});
}

}  // namespace

Point Point::make(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y) || !(y > 0.0)) {
    throw GeometryError("point must have finite coordinates and y > 0");
  }
  return Point{x, y};
}

BoundaryPoint BoundaryPoint::finite(double x) {
  if (!std::isfinite(x)) throw GeometryError("finite boundary point must be finite");
  return BoundaryPoint(x);
}

double BoundaryPoint::value() const {
  if (!value_) throw GeometryError("boundary point is infinite");
  return *value_;
}

UnimodularMap UnimodularMap::make(double a, double b, double c, double d) {
  if (std::fabs(a * d - b * c - 1.0) > kDetTolerance) {
    throw GeometryError("map must have determinant 1");
  }
  return {a, b, c, d};
}

Point UnimodularMap::apply(const Point& z) const {
  // (az+b)/(cz+d) = ((az+b) conj(cz+d)) / |cz+d|^2, and Im = y/|cz+d|^2.
  const double nx = a * z.x + b, ny = a * z.y;
  const double dx = c * z.x + d, dy = c * z.y;
  const double m = dx * dx + dy * dy;
  return Point{(nx * dx + ny * dy) / m, z.y / m};
}

BoundaryPoint UnimodularMap::apply(const BoundaryPoint& r) const {
  if (r.is_infinity()) {
    if (c == 0.0) return BoundaryPoint::infinity();
    return BoundaryPoint::finite(a / c);
  }
  const double den = c * r.value() + d;
  if (den == 0.0) return BoundaryPoint::infinity();
  return BoundaryPoint::finite((a * r.value() + b) / den);
}

UnimodularMap UnimodularMap::operator*(const UnimodularMap& o) const {
  return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
}

double hyp_distance(const Point& z1, const Point& z2) {
  const double dx = z1.x - z2.x, dy = z1.y - z2.y;
  const double q = (dx * dx + dy * dy) / (2.0 * z1.y * z2.y);
  // acosh(1 + q) = log1p(q + sqrt(q (q + 2))), accurate for small q.
  return std::log1p(q + std::sqrt(q * (q + 2.0)));
}

BoundaryPoint Geodesic::backward() const {
  if (shape == Shape::kVertical) {
    return forward.is_infinity() ? BoundaryPoint::finite(center) : BoundaryPoint::infinity();
  }
  const double f = forward.value();
  return BoundaryPoint::finite(f > center ? center - radius : center + radius);
}

Geodesic geodesic_through(const Point& x0, const BoundaryPoint& r) {
  Geodesic g;
  g.base = x0;
  g.forward = r;
  if (r.is_infinity() || r.value() == x0.x) {
    g.shape = Geodesic::Shape::kVertical;
    g.center = x0.x;
    return g;
  }
  const double rv = r.value();
  g.shape = Geodesic::Shape::kSemicircle;
  g.center = (rv * rv - x0.x * x0.x - x0.y * x0.y) / (2.0 * (rv - x0.x));
  g.radius = std::fabs(rv - g.center);
  return g;
}

Point point_at_time(const Geodesic& g, double t) {
  if (g.shape == Geodesic::Shape::kVertical) {
    const double s = g.forward.is_infinity() ? t : -t;
    return Point{g.base.x, g.base.y * std::exp(s)};
  }
  // Send backward -> 0 and forward -> ∞, flow by dilation, map back.
  const double b = g.backward().value();
  const double f = g.forward.value();
  const double k = 1.0 / std::sqrt(std::fabs(f - b));
  const UnimodularMap m = f > b ? UnimodularMap{k, -b * k, -k, f * k}
                                : UnimodularMap{k, -b * k, k, -f * k};
  const Point w0 = m.apply(g.base);
  const double e = std::exp(t);
  return m.inverse().apply(Point{w0.x * e, w0.y * e});
}

double log_horoheight(const BoundaryPoint& forward, const Point& z) {
  if (forward.is_infinity()) return std::log(z.y);
  const double dx = z.x - forward.value();
  return std::log(z.y) - std::log(dx * dx + z.y * z.y);
}

Horoball Horoball::make(const BoundaryPoint& tangency, double size) {
  if (!(size > 0.0) || !std::isfinite(size)) throw GeometryError("horoball size must be positive");
  return Horoball{tangency, size};
}

Horoball Horoball::ford(long long p, long long q) {
  if (q <= 0) throw GeometryError("Ford horoball needs q > 0");
  const double qd = static_cast<double>(q);
  return make(BoundaryPoint::finite(static_cast<double>(p) / qd), 1.0 / (2.0 * qd * qd));
}

bool Crossing::terminal() const { return std::isinf(t_in) || std::isinf(t_out); }

Crossing crossing_from_apex(double rho, double t_apex) {
  const double half = std::acosh(rho);
  return Crossing{t_apex - half, t_apex + half, rho};
}

std::optional<Crossing> horoball_crossing(const Geodesic& g, const Horoball& h) {
  const HoroChart chart{h.tangency, h.size};
  const BoundaryPoint fwd = chart.apply(g.forward);
  const BoundaryPoint bwd = chart.apply(g.backward());
  const ChartPoint base = chart.apply(g.base);

  if (fwd.is_infinity()) {
    // Heads straight up into the horoball and never leaves.
    return Crossing{-std::log(base.y), kInf, kInf};
  }
  if (bwd.is_infinity()) {
    // Comes down from the tangency point; inside for all earlier times.
    return Crossing{-kInf, -log_horoheight_chart(fwd, base), kInf};
  }
  const double rho = 0.5 * std::fabs(bwd.value() - fwd.value());
  if (!(rho > 1.0)) return std::nullopt;
  // The apex (c + i rho) has horoheight 1/(2 rho) relative to the forward end.
  const double t_apex = -std::log(2.0 * rho) - log_horoheight_chart(fwd, base);
  return crossing_from_apex(rho, t_apex);
}

ExcursionLength excursion_length(const Crossing& cr) {
  if (cr.terminal()) return {kInf, kInf};
  return {2.0 * std::sqrt((cr.rho - 1.0) * (cr.rho + 1.0)), std::log(cr.rho)};
}

double horocyclic_span(const Crossing& cr, double s, double t) {
  if (cr.terminal()) return 0.0;  // vertical in the chart: projections coincide
  const double ta = cr.t_apex();
  return cr.rho * sinh_over_cosh2(t - s, s - ta, t - ta);
}

double partial_excursion_length(const Crossing& cr, double T) {
  if (!(T >= cr.t_in && T < cr.t_out)) {
    throw GeometryError("partial excursion time outside [t_in, t_out)");
  }
  return horocyclic_span(cr, cr.t_in, T);
}

std::optional<double> depth_at_time(const Crossing& cr, double t) {
  if (t < cr.t_in || t > cr.t_out) return std::nullopt;
  if (std::isinf(cr.t_out)) return t - cr.t_in;
  if (std::isinf(cr.t_in)) return cr.t_out - t;
  return std::max(0.0, std::log(cr.rho) - log_cosh(t - cr.t_apex()));
}

double psi_segment_integral(const Crossing& cr, double from, double to, double R) {
  const double a = std::max(from, cr.t_in);
  const double b = std::min(to, cr.t_out);
  if (!(b > a) || !(R > 1.0)) return 0.0;  // empty depth band for R <= 1
  const double scale = 2.0 / std::numbers::pi;

  if (cr.terminal()) {
    // Vertical in the chart: depth grows (or shrinks) at unit speed.
    const double log_r = std::log(R);
    auto band = [&](double lo, double hi) {  // integral of e^d for d in [lo, hi] ∩ [0, log R)
      lo = std::max(lo, 0.0);
      hi = std::min(hi, log_r);
      return hi > lo ? std::exp(hi) - std::exp(lo) : 0.0;
    };
    if (std::isinf(cr.t_out)) return scale * band(a - cr.t_in, b - cr.t_in);
    return scale * band(cr.t_out - b, cr.t_out - a);
  }

  const double ta = cr.t_apex();
  double value = cr.rho * gd_difference(a - ta, b - ta);
  if (R < cr.rho) {
    // Remove the part deeper than log R: |t - t_apex| < acosh(rho / R).
    const double half = std::acosh(cr.rho / R);
    const double lo = std::max(a, ta - half), hi = std::min(b, ta + half);
    if (hi > lo) value -= cr.rho * gd_difference(lo - ta, hi - ta);
  }
  return scale * std::max(0.0, value);
}

double psi_excursion_integral(const Crossing& cr, double R) {
  if (cr.terminal()) return std::isinf(R) ? kInf : psi_segment_integral(cr, cr.t_in, cr.t_out, R);
  return psi_segment_integral(cr, cr.t_in, cr.t_out, R);
}

}  // namespace exlab
