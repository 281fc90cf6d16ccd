#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ovalflow/ellipse_melnikov.hpp"

using namespace ovalflow;
using namespace ovalflow::elliptic;

namespace {

double agm_K(double k)
{
    double x = 1.0;
    double y = std::sqrt(1.0 - k * k);
    for (int i = 0; i < 40; ++i)
    {
        double const m = 0.5 * (x + y);
        y = std::sqrt(x * y);
        x = m;
    }
    return std::numbers::pi / (2.0 * x);
}

double series_K(double k)
{
    double sum = 0;
    double coef = 1;
    for (int n = 0; n < 400; ++n)
    {
        sum += coef * coef * std::pow(k, 2 * n);
        coef *= (2.0 * n + 1) / (2.0 * n + 2);
    }
    return std::numbers::pi / 2 * sum;
}

EllipseParams const& params()
{
    static EllipseParams const e = make_ellipse_params(1.25, 0.8);
    return e;
}

CausticResonance const& res14()
{
    static CausticResonance const r = *resonance_solve(params(), 1, 2);
    return r;
}

CausticResonance const& res38()
{
    static CausticResonance const r = *resonance_solve(params(), 3, 4);
    return r;
}

// W1 with every orbit point taken from the caustic flow.
double analytic_w(EllipseParams const& e, CausticResonance const& r, double t)
{
    double sum = 0;
    for (double phi : caustic_orbit(r, t))
        sum += mu1(phi, e.a_c, e.b_c);
    return 2 * r.lambda * sum;
}

}  // namespace

TEST(Elliptic, CompleteIntegral)
{
    EXPECT_DOUBLE_EQ(elliptic_K(0.0), std::numbers::pi / 2);
    EXPECT_NEAR(elliptic_K(0.5) / agm_K(0.5) - 1, 0.0, 1e-12);
    EXPECT_NEAR(agm_K(0.5) / series_K(0.5) - 1, 0.0, 1e-12);
    for (double k : {0.1, 0.7, 0.9, 0.99})
        EXPECT_NEAR(elliptic_K(k) / agm_K(k) - 1, 0.0, 1e-12) << k;
    EXPECT_THROW(elliptic_K(1.0), ConfigError);
    EXPECT_THROW(elliptic_K(-0.1), ConfigError);
}

TEST(Elliptic, IncompleteIntegral)
{
    for (double phi : {-2.0, 0.0, 0.4, 1.5, 5.0})
        EXPECT_NEAR(elliptic_F(phi, 0.0), phi, 1e-14);
    double const k = 0.6;
    EXPECT_NEAR(elliptic_F(std::numbers::pi / 2, k), elliptic_K(k), 1e-14);
    for (double phi : {0.2, 1.1, 1.9, 3.0})
    {
        EXPECT_NEAR(elliptic_F(phi + std::numbers::pi, k), elliptic_F(phi, k) + 2 * elliptic_K(k),
                    1e-13);
        EXPECT_NEAR(elliptic_F(-phi, k), -elliptic_F(phi, k), 1e-14);
    }
    EXPECT_THROW(elliptic_F(0.3, 1.2), ConfigError);
}

TEST(Elliptic, JacobiIdentities)
{
    auto const z = jacobi(0.0, 0.5);
    EXPECT_DOUBLE_EQ(z.sn, 0.0);
    EXPECT_DOUBLE_EQ(z.cn, 1.0);
    EXPECT_DOUBLE_EQ(z.dn, 1.0);
    EXPECT_NEAR(jacobi(elliptic_K(0.5), 0.5).sn, 1.0, 1e-14);
    for (double k : {0.5, 0.72019958, 0.99})
    {
        double const kk = std::sqrt(1 - k * k);
        for (double du : {0.0, 1e-9, -1e-6, 1e-3})
        {
            auto const v = jacobi(elliptic_K(k) + du, k);
            EXPECT_NEAR(v.dn * v.dn + k * k * v.sn * v.sn, 1.0, 1e-14);
            if (du == 0.0)
            {
                EXPECT_NEAR(v.dn, kk, 1e-14);
            }
        }
    }
    for (int i = 0; i <= 400; ++i)
    {
        double const u = -10.0 + 20.0 * i / 400;
        auto const c0 = jacobi(u, 0.0);
        EXPECT_NEAR(c0.sn, std::sin(u), 1e-14);
        EXPECT_NEAR(c0.cn, std::cos(u), 1e-14);
        EXPECT_NEAR(c0.dn, 1.0, 1e-14);
        for (double k : {0.3, 0.72, 0.995})
        {
            auto const v = jacobi(u, k);
            EXPECT_NEAR(v.sn * v.sn + v.cn * v.cn, 1.0, 1e-12);
            EXPECT_NEAR(v.dn * v.dn + k * k * v.sn * v.sn, 1.0, 1e-12);
        }
    }
    for (int i = 0; i <= 200; ++i)
    {
        double const phi = -std::numbers::pi / 2 + std::numbers::pi * i / 200;
        for (double k : {0.3, 0.72, 0.995})
            EXPECT_NEAR(jacobi(elliptic_F(phi, k), k).sn, std::sin(phi), 1e-12);
    }
}

TEST(Mu1, Values)
{
    EXPECT_NEAR(mu1(0.0, params()), -0.4096, 1e-14);
    EXPECT_NEAR(mu1(pi / 2, params()), -2.44140625, 1e-13);
    for (double phi : {0.3, 1.2, 2.5})
    {
        EXPECT_NEAR(mu1(phi + two_pi, params()), mu1(phi, params()), 1e-13);
        EXPECT_NEAR(mu1(-phi, params()), mu1(phi, params()), 1e-13);
        EXPECT_NEAR(mu1_uniformized(phi, 0.0, 1.25, 0.8), mu1(phi, params()), 1e-13);
    }
    // The display without b^2 agrees only when b = 1.
    EXPECT_NEAR(mu1(0.7, 1.5, 1.0, Mu1Form::unit_b), mu1(0.7, 1.5, 1.0), 1e-14);
    EXPECT_NEAR(mu1(0.7, 1.25, 0.8, Mu1Form::curvature_normal), mu1(pi / 2 - 0.7, 1.25, 0.8), 1e-13);
}

TEST(Caustic, CircleLimitRejected)
{
    EXPECT_THROW(make_ellipse_params(1.0, 1.0), ConfigError);
    EXPECT_THROW(make_ellipse_params(0.8, 1.25), ConfigError);
    EXPECT_THROW(caustic_modulus(params(), 0.8), ConfigError);
    EXPECT_THROW(caustic_modulus(params(), 1.3), ConfigError);
}

TEST(Caustic, RotationMonotoneWithLimits)
{
    auto const& e = params();
    double prev = 1.0;
    for (int i = 1; i < 2000; ++i)
    {
        double const l = e.b + (e.a - e.b) * i / 2000.0;
        double const r = rotation_number(e, l);
        EXPECT_LT(r, prev);
        prev = r;
    }
    auto const range = rotation_range(e);
    // The lambda -> b limit is approached only logarithmically.
    EXPECT_GT(rotation_number(e, e.b * (1 + 1e-12)), 0.46);
    EXPECT_GT(rotation_number(e, e.b * (1 + 1e-14)), rotation_number(e, e.b * (1 + 1e-12)));
    EXPECT_LT(rotation_number(e, e.b * (1 + 1e-14)), range.high);
    EXPECT_NEAR(rotation_number(e, e.a * (1 - 1e-12)), range.low, 1e-5);
    EXPECT_NEAR(range.low, 0.221065664, 1e-8);
}

TEST(Resonance, AdmissibleTypes)
{
    auto const& r = res14();
    // Frozen from an independent scipy prototype.
    EXPECT_NEAR(r.lambda, 1.0411584125907, 1e-9);
    EXPECT_NEAR(r.modulus, 0.7201995808086, 1e-9);
    EXPECT_NEAR(r.delta, r.quarter_period, 1e-12);
    EXPECT_LT(r.closure_residual, 1e-6);
    EXPECT_LT(r.tangency_residual, 1e-8);
    EXPECT_NEAR(std::sin(r.zeta / 2), params().b / r.lambda, 1e-12);

    auto const& s = res38();
    EXPECT_NEAR(s.lambda, 0.80275301943544, 1e-9);
    EXPECT_NEAR(8 * s.delta, 12 * s.quarter_period, 1e-9);
    EXPECT_LT(s.closure_residual, 1e-6);

    EXPECT_FALSE(resonance_solve(params(), 1, 3).has_value());
    EXPECT_THROW(resonance_solve(params(), 2, 4), ConfigError);
}

TEST(Resonance, OrbitsTangentToCaustic)
{
    for (auto const* r : {&res14(), &res38()})
        for (double t : {0.0, 0.11, 0.5, 1.3})
        {
            auto const orbit = caustic_orbit(*r, t);
            EXPECT_LT(tangency_residual(params(), r->lambda, orbit), 1e-8);
            EXPECT_LT(closure_residual(params(), orbit), 1e-6);
        }
}

TEST(ChordIdentity, ResidualAndSymmetries)
{
    for (auto const* r : {&res14(), &res38()})
    {
        auto orbit = caustic_orbit(*r, 0.37);
        double const base = chord_identity_residual(params(), *r, orbit);
        EXPECT_LT(base, 1e-6);
        std::rotate(orbit.begin(), orbit.begin() + 1, orbit.end());
        EXPECT_NEAR(chord_identity_residual(params(), *r, orbit), base, 1e-12);
        std::reverse(orbit.begin(), orbit.end());
        EXPECT_NEAR(chord_identity_residual(params(), *r, orbit), base, 1e-12);
    }
    auto broken = caustic_orbit(res14(), 0.37);
    broken[1] += 0.01;
    EXPECT_THROW(chord_identity_residual(params(), res14(), broken), NumericalError);
}

TEST(LengthVariation, ReductionHolds)
{
    for (auto const* r : {&res14(), &res38()})
        for (auto form : {Mu1Form::standard, Mu1Form::unit_b, Mu1Form::curvature_normal})
            for (double t : {0.0, 0.21, 0.9})
            {
                auto const chk = length_variation_check(params(), *r, caustic_orbit(*r, t), form);
                EXPECT_LT(chk.residual(), 1e-7);
                EXPECT_NEAR(chk.direct, chk.reduced, 1e-10);
            }
}

TEST(Melnikov, MidpointSolvesReproduceCausticOrbit)
{
    auto const curve = make_ellipse(params().a_c, params().b_c, 96);
    for (auto const* r : {&res14(), &res38()})
        for (int i = 0; i < 24; ++i)
        {
            double const t = r->delta * i / 24.0;
            EXPECT_NEAR(melnikov_potential(curve, params(), *r, t), analytic_w(params(), *r, t), 1e-9);
        }
}

TEST(Melnikov, PeriodicAndEven)
{
    auto const curve = make_ellipse(params().a_c, params().b_c, 96);
    auto const& r = res14();
    for (double t : {0.05, 0.4, 1.1})
    {
        double const w = melnikov_potential(curve, params(), r, t);
        EXPECT_NEAR(melnikov_potential(curve, params(), r, t + r.delta), w, 1e-9);
        EXPECT_NEAR(melnikov_potential(curve, params(), r, -t), w, 1e-9);
    }
}

TEST(Melnikov, CausticsDestroyed)
{
    for (auto const* r : {&res14(), &res38()})
    {
        auto const m = melnikov_curve(params(), *r, 256);
        ASSERT_EQ(m.samples.size(), 256u);
        EXPECT_TRUE(m.destroyed);
        EXPECT_GT(m.amplitude, 1e-8);
        EXPECT_GT(m.amplitude, 10 * m.noise_floor);
        EXPECT_LT(m.samples.back().t, r->delta);
    }
    MelnikovOptions alt;
    alt.form = Mu1Form::curvature_normal;
    EXPECT_TRUE(melnikov_curve(params(), res14(), 64, alt).destroyed);
    EXPECT_THROW(melnikov_curve(params(), res14(), 8), ConfigError);
}

TEST(Melnikov, AmplitudeContinuousInAxes)
{
    // Smooth dependence: halving a 1% axis perturbation halves the change to
    // first order, with no jumps in between.
    auto amplitude = [](double s) {
        auto const e = make_ellipse_params(1.25 * s, 0.8);
        auto const r = resonance_solve(e, 1, 2);
        EXPECT_TRUE(r.has_value());
        return melnikov_curve(e, *r, 64).amplitude;
    };
    double const base = amplitude(1.0);
    for (double s : {0.01, -0.01})
    {
        double const full = amplitude(1 + s) - base;
        double const half = amplitude(1 + s / 2) - base;
        EXPECT_LT(std::abs(full / base), 0.25);
        EXPECT_NEAR(half / full, 0.5, 0.05);
    }
}
