#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "exlab/hyperbolic.hpp"

using namespace exlab;

namespace {

// Composite Simpson on [a, b].
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

UnimodularMap random_map(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    const double a = u(rng), b = u(rng), c = u(rng);
    if (std::fabs(a) < 0.2) continue;
    return {a, b, c, (1.0 + b * c) / a};
  }
}

Point random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(-3.0, 3.0), uy(0.2, 3.0);
  return {ux(rng), uy(rng)};
}

}  // namespace

TEST(Mobius, IdentityTranslationAndPole) {
  const Point z = UnimodularMap::identity().apply(Point{0, 1});
  EXPECT_DOUBLE_EQ(z.x, 0.0);
  EXPECT_DOUBLE_EQ(z.y, 1.0);
  const Point w = UnimodularMap{1, 1, 0, 1}.apply(Point{0, 1});
  EXPECT_DOUBLE_EQ(w.x, 1.0);
  EXPECT_DOUBLE_EQ(w.y, 1.0);
  const UnimodularMap s{0, -1, 1, 0};
  EXPECT_TRUE(s.apply(BoundaryPoint::finite(0.0)).is_infinity());
  EXPECT_DOUBLE_EQ(s.apply(BoundaryPoint::infinity()).value(), 0.0);
}

TEST(Mobius, RejectsBadDeterminant) {
  EXPECT_THROW(UnimodularMap::make(1, 1, 1, 1), GeometryError);
  EXPECT_NO_THROW(UnimodularMap::make(2, 1, 1, 1));
}

TEST(Distance, ClosedFormValues) {
  EXPECT_NEAR(hyp_distance({0, 1}, {0, 2}), std::log(2.0), 1e-15);
  EXPECT_NEAR(hyp_distance({0, 1}, {1, 1}), std::acosh(1.5), 1e-15);
  EXPECT_NEAR(std::acosh(1.5), 0.962424, 1e-6);
  EXPECT_EQ(hyp_distance({0.3, 0.7}, {0.3, 0.7}), 0.0);
}

TEST(Distance, IsometryInvariance) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const UnimodularMap m = random_map(rng);
    const Point z1 = random_point(rng), z2 = random_point(rng);
    EXPECT_NEAR(hyp_distance(m.apply(z1), m.apply(z2)), hyp_distance(z1, z2), 1e-9);
  }
}

TEST(Geodesic, ThroughExamples) {
  const Geodesic v = geodesic_through({0, 1}, BoundaryPoint::infinity());
  EXPECT_EQ(v.shape, Geodesic::Shape::kVertical);
  EXPECT_EQ(v.center, 0.0);

  const Geodesic g1 = geodesic_through({0, 1}, BoundaryPoint::finite(1.0));
  EXPECT_NEAR(g1.center, 0.0, 1e-15);
  EXPECT_NEAR(g1.radius, 1.0, 1e-15);

  // c^2 + 1 = (2 - c)^2  =>  c = 3/4, radius 5/4.
  const Geodesic g2 = geodesic_through({0, 1}, BoundaryPoint::finite(2.0));
  EXPECT_NEAR(g2.center, 0.75, 1e-15);
  EXPECT_NEAR(g2.radius, 1.25, 1e-15);
  EXPECT_NEAR(g2.backward().value(), -0.5, 1e-15);
}

TEST(Geodesic, PointAtTimeExamples) {
  const Geodesic v = geodesic_through({0, 1}, BoundaryPoint::infinity());
  const Point p = point_at_time(v, std::log(2.0));
  EXPECT_NEAR(p.x, 0.0, 1e-15);
  EXPECT_NEAR(p.y, 2.0, 1e-14);

  const Geodesic g = geodesic_through({0.2, 0.9}, BoundaryPoint::finite(1.7));
  const Point p0 = point_at_time(g, 0.0);
  EXPECT_NEAR(p0.x, 0.2, 1e-12);
  EXPECT_NEAR(p0.y, 0.9, 1e-12);

  // Unit circle, base i, toward 1: bisect along the circle for the point
  // at distance acosh(1.5) and compare.
  const Geodesic c = geodesic_through({0, 1}, BoundaryPoint::finite(1.0));
  const double t = std::acosh(1.5);
  double lo = 0.0, hi = std::numbers::pi / 2;  // angle measured from the apex
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const Point q{std::sin(mid), std::cos(mid)};
    (hyp_distance({0, 1}, q) < t ? lo : hi) = mid;
  }
  const Point oracle{std::sin(lo), std::cos(lo)};
  const Point got = point_at_time(c, t);
  EXPECT_NEAR(got.x, oracle.x, 1e-10);
  EXPECT_NEAR(got.y, oracle.y, 1e-10);
}

TEST(Geodesic, UnitSpeedProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(-4.0, 4.0), ut(-6.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    const Point x0 = random_point(rng);
    const Geodesic g = geodesic_through(x0, BoundaryPoint::finite(ur(rng)));
    const double s = ut(rng), t = ut(rng);
    EXPECT_NEAR(hyp_distance(point_at_time(g, s), point_at_time(g, t)), std::fabs(s - t), 1e-9);
  }
}

TEST(Geodesic, TimeIncreasesTowardForwardEndpoint) {
  const Geodesic g = geodesic_through({0.0, 1.0}, BoundaryPoint::finite(2.0));
  const Point far = point_at_time(g, 30.0);
  EXPECT_NEAR(far.x, 2.0, 1e-9);
  EXPECT_LT(far.y, 1e-9);
}

TEST(Crossing, SemicircleAgainstHoroballAtInfinity) {
  // Semicircle center 0 radius 2 through base (0, 2).
  const Geodesic g = geodesic_through({0, 2}, BoundaryPoint::finite(2.0));
  const auto cr = horoball_crossing(g, Horoball::at_infinity());
  ASSERT_TRUE(cr.has_value());
  EXPECT_NEAR(cr->rho, 2.0, 1e-14);
  const auto e = excursion_length(*cr);
  EXPECT_NEAR(e.E, 2.0 * std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(e.max_depth, std::log(2.0), 1e-14);
  // Entry and exit at x = ±sqrt(3), height 1.
  const Point pin = point_at_time(g, cr->t_in), pout = point_at_time(g, cr->t_out);
  EXPECT_NEAR(pin.x, -std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(pin.y, 1.0, 1e-9);
  EXPECT_NEAR(pout.x, std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(pout.y, 1.0, 1e-9);
}

TEST(Crossing, ApexBelowHoroballIsEmpty) {
  const Geodesic g = geodesic_through({0, 0.5}, BoundaryPoint::finite(0.5));
  EXPECT_FALSE(horoball_crossing(g, Horoball::at_infinity()).has_value());
}

TEST(Crossing, TangentGeodesicIsEmpty) {
  const Geodesic g = geodesic_through({0, 1}, BoundaryPoint::finite(1.0));
  EXPECT_FALSE(horoball_crossing(g, Horoball::at_infinity()).has_value());
}

TEST(Crossing, VerticalIntoCuspNeverExits) {
  const Geodesic v = geodesic_through({0, 0.5}, BoundaryPoint::infinity());
  const auto cr = horoball_crossing(v, Horoball::at_infinity());
  ASSERT_TRUE(cr.has_value());
  EXPECT_TRUE(cr->terminal());
  EXPECT_TRUE(std::isinf(cr->t_out));
  EXPECT_NEAR(cr->t_in, std::log(2.0), 1e-14);
}

TEST(Crossing, ApexDepthMatchesRho) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(0.05, 0.6);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    const Point x0{ux(rng), uy(rng)};
    const Geodesic g = geodesic_through(x0, BoundaryPoint::finite(ux(rng) * 3.0));
    const Horoball h = Horoball::ford(0, 1);  // disk of radius 1/2 at 0
    const auto cr = horoball_crossing(g, h);
    if (!cr) continue;
    ++checked;
    // Depth of the midpoint: distance to the horocycle, via hyperbolic
    // distance to the horoball's top point along the vertical (exact for
    // the chart), computed independently as log of height in that chart.
    const Point mid = point_at_time(g, cr->t_apex());
    const double dx = mid.x, m = dx * dx + mid.y * mid.y;
    const double chart_height = mid.y / m;  // w = -1/z has Im = y/|z|^2
    EXPECT_NEAR(std::log(chart_height), std::log(cr->rho), 1e-9);
    // Entry and exit points are on the boundary circle.
    for (double t : {cr->t_in, cr->t_out}) {
      const Point p = point_at_time(g, t);
      EXPECT_NEAR(p.x * p.x + (p.y - 0.5) * (p.y - 0.5), 0.25, 1e-9);
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Crossing, NormalizationIndependence) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Point x0{ux(rng), 0.3 + 0.2 * ux(rng)};
    const double r = 2.0 * ux(rng);
    const Geodesic g = geodesic_through(x0, BoundaryPoint::finite(r));
    const auto cr = horoball_crossing(g, Horoball::at_infinity(0.4));
    if (!cr) continue;
    const UnimodularMap m = random_map(rng);
    // Image of {y >= 0.4} under m: a disk tangent at m(∞) = a/c of diameter 1/(0.4 c^2).
    if (std::fabs(m.c) < 0.05) continue;
    const Horoball hm = Horoball::make(BoundaryPoint::finite(m.a / m.c), 1.0 / (2.0 * 0.4 * m.c * m.c));
    const Point mx0 = m.apply(x0);
    const BoundaryPoint mr = m.apply(BoundaryPoint::finite(r));
    if (mr.is_infinity()) continue;
    const auto cm = horoball_crossing(geodesic_through(mx0, mr), hm);
    ASSERT_TRUE(cm.has_value());
    const auto e1 = excursion_length(*cr), e2 = excursion_length(*cm);
    EXPECT_NEAR(e1.E, e2.E, 1e-8 * std::max(1.0, e1.E));
    EXPECT_NEAR(e1.max_depth, e2.max_depth, 1e-8);
    EXPECT_NEAR(cr->t_in, cm->t_in, 1e-8);
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Excursion, LengthClosedForms) {
  const auto tangent = excursion_length(Crossing{0.0, 0.0, 1.0});
  EXPECT_EQ(tangent.E, 0.0);
  EXPECT_EQ(tangent.max_depth, 0.0);
  const auto two = excursion_length(crossing_from_apex(2.0, 0.0));
  EXPECT_NEAR(two.E, 3.464102, 1e-6);
  EXPECT_NEAR(two.max_depth, 0.693147, 1e-6);
  for (double d : {0.1, 1.0, 5.0, 20.0}) {
    EXPECT_NEAR(excursion_length(crossing_from_apex(std::cosh(d), 0.0)).E, 2.0 * std::sinh(d),
                1e-9 * std::sinh(d));
  }
}

TEST(Excursion, PartialLength) {
  const Crossing cr = crossing_from_apex(2.0, 5.0);
  EXPECT_EQ(partial_excursion_length(cr, cr.t_in), 0.0);
  EXPECT_NEAR(partial_excursion_length(cr, std::nextafter(cr.t_out, 0.0)), excursion_length(cr).E, 1e-6);
  EXPECT_NEAR(partial_excursion_length(cr, 5.0), std::sqrt(3.0), 1e-12);
  EXPECT_THROW(partial_excursion_length(cr, cr.t_out), GeometryError);
  EXPECT_THROW(partial_excursion_length(cr, cr.t_in - 1.0), GeometryError);
}

TEST(Excursion, PartialLengthMatchesChartGeometry) {
  // In the chart the position at time tau from the apex is c + rho tanh(tau).
  const double rho = 7.5;
  const Crossing cr = crossing_from_apex(rho, 0.0);
  for (double T = cr.t_in; T < cr.t_out; T += 0.01) {
    const double oracle = rho * std::tanh(T) + std::sqrt(rho * rho - 1.0);
    EXPECT_NEAR(partial_excursion_length(cr, T), oracle, 1e-10);
  }
}

TEST(Excursion, PartialLengthMonotone) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ur(0.0, 12.0);
  for (int k = 0; k < 200; ++k) {
    const Crossing cr = crossing_from_apex(std::exp(ur(rng)) + 1.0, ur(rng));
    double prev = -1.0;
    for (int i = 0; i < 400; ++i) {
      const double T = cr.t_in + (cr.t_out - cr.t_in) * i / 400.0;
      const double v = partial_excursion_length(cr, T);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Psi, ClosedFormExamples) {
  EXPECT_EQ(psi_excursion_integral(Crossing{0, 0, 1.0}, INFINITY), 0.0);
  const Crossing cr = crossing_from_apex(2.0, 0.0);
  EXPECT_NEAR(psi_excursion_integral(cr, INFINITY), 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(psi_excursion_integral(cr, 2.0), 8.0 / 3.0, 1e-12);
}

TEST(Psi, AgreesWithQuadrature) {
  // Psi = (2/pi) e^depth with depth(t) = log(rho sech(t - t_apex)).
  for (double rho : {1.3, 2.0, 10.0, 150.0}) {
    const Crossing cr = crossing_from_apex(rho, 1.0);
    for (double R : {1.5, 4.0, 64.0, HUGE_VAL}) {
      auto f = [&](double t) {
        const double y = rho / std::cosh(t - 1.0);
        return (y >= 1.0 && y < R) ? (2.0 / std::numbers::pi) * y : 0.0;
      };
      const double q = simpson(f, cr.t_in, cr.t_out, 400000);
      EXPECT_NEAR(psi_excursion_integral(cr, R), q, 2e-3 * std::max(1.0, q)) << rho << " " << R;
    }
  }
}

TEST(Psi, SpecFormula) {
  for (double rho : {1.01, 2.5, 40.0, 1e4}) {
    const Crossing cr = crossing_from_apex(rho, 0.0);
    for (double R : {1.0, 2.0, 30.0, 1e5}) {
      const double pi = std::numbers::pi;
      double expect = rho * (pi - 2.0 * std::asin(1.0 / rho));
      if (rho > R) expect -= rho * (pi - 2.0 * std::asin(R / rho));
      expect *= 2.0 / pi;
      EXPECT_NEAR(psi_excursion_integral(cr, R), expect, 1e-9 * std::max(1.0, expect));
    }
  }
}

TEST(Psi, TruncationAtOneVanishes) {
  EXPECT_NEAR(psi_excursion_integral(crossing_from_apex(50.0, 0.0), 1.0), 0.0, 1e-9);
}

TEST(Psi, ComparisonWithExcursionLength) {
  // |integral - E| < 2 everywhere; E - integral -> 4/pi.
  double last = 0.0;
  for (double lr = 0.0; lr <= 6.0; lr += 0.01) {
    const double rho = std::pow(10.0, lr);
    const Crossing cr = crossing_from_apex(rho, 0.0);
    const double diff = excursion_length(cr).E - psi_excursion_integral(cr, INFINITY);
    EXPECT_LT(std::fabs(diff), 2.0);
    last = diff;
  }
  EXPECT_NEAR(last, 4.0 / std::numbers::pi, 0.01);
}

TEST(Psi, SegmentsAdd) {
  const Crossing cr = crossing_from_apex(33.0, 2.0);
  const double whole = psi_excursion_integral(cr, 8.0);
  double parts = 0.0;
  for (double t = cr.t_in; t < cr.t_out; t += 0.37) parts += psi_segment_integral(cr, t, t + 0.37, 8.0);
  EXPECT_NEAR(parts, whole, 1e-10 * whole);
}
