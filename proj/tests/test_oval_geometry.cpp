#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ovalflow/oval_geometry.hpp"

using namespace ovalflow;

namespace {

SupportCurve cw3() { return make_constant_width(2.0, {{3, 0.05, 0.0}}); }

}  // namespace

TEST(Circle, ConstantSupportAndRadius)
{
    auto const c = make_circle(1.0);
    for (double t : {0.0, 0.7, 2.0, 5.9})
    {
        auto const e = eval(c, t);
        EXPECT_DOUBLE_EQ(e.h, 1.0);
        EXPECT_DOUBLE_EQ(e.dh, 0.0);
        EXPECT_DOUBLE_EQ(e.d2h, 0.0);
        EXPECT_DOUBLE_EQ(e.radius, 1.0);
        EXPECT_NEAR(norm(position(c, t)), 1.0, 1e-15);
        EXPECT_NEAR(norm(evolute(c, t)), 0.0, 1e-15);
    }
    EXPECT_NEAR(area(c), pi, 1e-14);
    EXPECT_NEAR(entropy(c), 0.0, 1e-15);
    EXPECT_NEAR(width(make_circle(2.0), 1.3), 4.0, 1e-14);
}

TEST(Circle, RejectsNonPositiveRadius)
{
    EXPECT_THROW(make_circle(0.0), ConfigError);
    EXPECT_THROW(make_circle(-1.0), ConfigError);
}

TEST(Ellipse, DegenerateIsCircle)
{
    auto const e = make_ellipse(1.0, 1.0);
    auto const c = make_circle(1.0, e.harmonic_count());
    for (std::size_t n = 0; n <= e.harmonic_count(); ++n)
    {
        EXPECT_EQ(e.series().c[n], c.series().c[n]);
        EXPECT_EQ(e.series().s[n], c.series().s[n]);
    }
}

TEST(Ellipse, AxisRadiiMatchClosedForm)
{
    double const a = 1.25, b = 0.8;
    auto const c = make_ellipse(a, b);
    // Tangent angle pi/2 sits at (a, 0); tangent angle 0 at (0, -b).
    EXPECT_NEAR(eval(c, pi / 2).radius, b * b / a, 1e-10);
    EXPECT_NEAR(eval(c, 3 * pi / 2).radius, 0.512, 1e-10);
    EXPECT_NEAR(eval(c, 0.0).radius, a * a / b, 1e-10);
    EXPECT_NEAR(eval(c, pi).radius, 1.953125, 1e-10);
    EXPECT_NEAR(position(c, pi / 2).x, a, 1e-12);
    EXPECT_NEAR(position(c, 0.0).y, -b, 1e-12);
}

TEST(Ellipse, RadiusMatchesAnalyticCurvatureEverywhere)
{
    double const a = 1.25, b = 0.8;
    auto const c = make_ellipse(a, b);
    for (int j = 0; j < 97; ++j)
    {
        double const t = two_pi * j / 97.0;
        double const h = ellipse_support(a, b, t);
        EXPECT_NEAR(eval(c, t).radius, a * a * b * b / (h * h * h), 1e-10);
    }
}

TEST(Ellipse, TraceResidual)
{
    double const a = 1.25, b = 0.8;
    auto const c = make_ellipse(a, b, 64);
    for (auto const& s : sample_trace(c))
        EXPECT_LT(std::abs(s.x * s.x / (a * a) + s.y * s.y / (b * b) - 1.0), 1e-6);
}

TEST(Ellipse, AreaAndEvoluteCusp)
{
    auto const c = make_ellipse(1.25, 0.8);
    EXPECT_NEAR(area(c), pi, 1e-12);
    auto const e = evolute(c, pi / 2);
    EXPECT_NEAR(std::abs(e.x), 1.25 - 0.64 / 1.25, 1e-10);
    EXPECT_NEAR(e.y, 0.0, 1e-12);
}

TEST(Ellipse, RejectsBadAxes)
{
    EXPECT_THROW(make_ellipse(0.8, 1.25), ConfigError);
    EXPECT_THROW(make_ellipse(1.0, 0.0), ConfigError);
}

TEST(Ellipse, TruncationLosingConvexityIsAnError)
{
    // Very eccentric ellipse with too few harmonics.
    EXPECT_THROW(make_ellipse(8.0, 0.125, 8), ConvexityError);
}

TEST(ConstantWidth, SingleHarmonic)
{
    auto const c = cw3();
    auto const e = eval(c, 0.0);
    EXPECT_NEAR(e.h, 1.05, 1e-15);
    EXPECT_NEAR(e.dh, 0.0, 1e-15);
    EXPECT_NEAR(e.d2h, -0.45, 1e-15);
    EXPECT_NEAR(e.radius, 0.6, 1e-15);
    for (int j = 0; j < 50; ++j)
    {
        double const t = 0.1257 * j;
        EXPECT_NEAR(eval(c, t).radius, 1.0 - 0.4 * std::cos(3 * t), 1e-14);
        EXPECT_NEAR(width(c, t), 2.0, 1e-14);
    }
    EXPECT_NEAR(area(c), pi * (1.0 - 4.0 * 0.05 * 0.05), 1e-14);
    EXPECT_NEAR(area(c), 3.1101767, 1e-7);
}

TEST(ConstantWidth, NoHarmonicsIsUnitCircle)
{
    auto const c = make_constant_width(2.0, {});
    EXPECT_DOUBLE_EQ(eval(c, 1.0).h, 1.0);
}

TEST(ConstantWidth, RejectsEvenOrLowHarmonics)
{
    EXPECT_THROW(make_constant_width(2.0, {{4, 0.01, 0.0}}), ConfigError);
    EXPECT_THROW(make_constant_width(2.0, {{1, 0.01, 0.0}}), ConfigError);
}

TEST(ConstantWidth, ConvexityLimit)
{
    EXPECT_NO_THROW(make_constant_width(2.0, {{3, 0.12, 0.0}}));
    EXPECT_THROW(make_constant_width(2.0, {{3, 0.13, 0.0}}), ConvexityError);
}

TEST(Geometry, PositionDerivativeIsRadiusTimesTangent)
{
    auto const c = make_ellipse(1.25, 0.8);
    double const d = 1e-5;
    for (double t : {0.1, 1.0, 2.2, 4.0, 5.5})
    {
        auto const fd = (1.0 / (2 * d)) * (position(c, t + d) - position(c, t - d));
        auto const expect = eval(c, t).radius * tangent(t);
        EXPECT_NEAR(fd.x, expect.x, 1e-8);
        EXPECT_NEAR(fd.y, expect.y, 1e-8);
    }
}

TEST(Geometry, SupportIdentityAndClosure)
{
    auto const c = cw3();
    for (std::size_t j = 0; j < c.grid_size(); ++j)
    {
        double const t = c.grid_angle(j);
        auto const x = position(c, t);
        EXPECT_NEAR(dot(x, normal(t)), -c.grid_h()[j], 1e-14);
        EXPECT_NEAR(norm(position(c, t + two_pi) - x), 0.0, 1e-13);
    }
}

TEST(Geometry, AreaMatchesShoelaceOracle)
{
    auto const c = make_ellipse(1.6, 0.5);
    int const n = 20000;
    double shoelace = 0;
    for (int j = 0; j < n; ++j)
    {
        auto const p = position(c, two_pi * j / n);
        auto const q = position(c, two_pi * (j + 1) / n);
        shoelace += 0.5 * cross(p, q);
    }
    EXPECT_NEAR(area(c), shoelace, 1e-6);
    EXPECT_NEAR(area(c), pi * 1.6 * 0.5, 1e-10);
}

TEST(Geometry, EntropyOfEllipseMatchesQuadratureOracle)
{
    double const a = 1.25, b = 0.8;
    auto const c = make_ellipse(a, b);
    // -(1/2pi) int log(a^2 b^2 / h^3) by a fine midpoint rule.
    int const n = 100000;
    double sum = 0;
    for (int j = 0; j < n; ++j)
    {
        double const t = two_pi * (j + 0.5) / n;
        double const h = ellipse_support(a, b, t);
        sum -= std::log(a * a * b * b / (h * h * h));
    }
    EXPECT_NEAR(entropy(c), sum / n, 1e-10);
}

TEST(Geometry, ArclengthRoundTrip)
{
    auto const c = make_ellipse(1.25, 0.8);
    EXPECT_NEAR(c.arclength(two_pi), c.perimeter(), 1e-12);
    // Ramanujan's second approximation is accurate to ~1e-10 here.
    double const a = 1.25, b = 0.8;
    double const hh = (a - b) * (a - b) / ((a + b) * (a + b));
    double const ram = pi * (a + b) * (1 + 3 * hh / (10 + std::sqrt(4 - 3 * hh)));
    EXPECT_NEAR(c.perimeter(), ram, 1e-8);
    for (double t : {0.0, 0.3, 2.5, 6.0, 9.0})
        EXPECT_NEAR(c.angle_at_arclength(c.arclength(t)), t, 1e-12);
}

TEST(ChordIntegral, CircleExamples)
{
    auto const c = make_circle(1.0);
    EXPECT_NEAR(chord_length_integral(c, 0.4, 0.4 + pi, pi / 2), 2.0, 1e-13);
    EXPECT_NEAR(chord_length_integral(c, 1.0, 1.0 + pi / 2, pi / 4), std::sqrt(2.0), 1e-13);
}

TEST(ChordIntegral, EllipseMajorDiameter)
{
    auto const c = make_ellipse(1.25, 0.8);
    EXPECT_NEAR(chord_length_integral(c, pi / 2, 3 * pi / 2, pi / 2), 2.5, 1e-10);
}

TEST(ChordIntegral, InconsistentTripleRejected)
{
    auto const c = make_ellipse(1.25, 0.8);
    EXPECT_THROW(chord_length_integral(c, 0.0, 1.0, pi / 2), NumericalError);
}

TEST(ChordBound, ConstantAndPositivity)
{
    EXPECT_NEAR(chord_bound_constant(), -4.0 * std::log(2.0), 1e-12);
    auto const c = make_circle(1.0);
    EXPECT_GT(chord_lower_bound(c), 0.0);
    EXPECT_LE(chord_lower_bound(c), 2.0);
    EXPECT_NEAR(chord_lower_bound(c), 0.25, 1e-12);
}

TEST(ChordBound, SampledChordsOfConstantWidthCurve)
{
    auto const c = cw3();
    double const bound = chord_lower_bound(c);
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> th(0.0, two_pi);
    std::uniform_real_distribution<double> ph(pi / 6, 5 * pi / 6);
    double minimum = 1e300;
    for (int i = 0; i < 1000; ++i)
    {
        // Far intersection by dense scan of the cross product sign.
        double const t0 = th(rng);
        double const phi = ph(rng);
        auto const x0 = position(c, t0);
        PlanePoint const v = std::cos(phi) * tangent(t0) + std::sin(phi) * normal(t0);
        double lo = t0 + 1e-9, hi = t0 + two_pi - 1e-9;
        for (int it = 0; it < 200; ++it)
        {
            double const mid = 0.5 * (lo + hi);
            (cross(position(c, mid) - x0, v) > 0 ? lo : hi) = mid;
        }
        minimum = std::min(minimum, norm(position(c, lo) - x0));
    }
    EXPECT_GE(minimum, bound);
}
