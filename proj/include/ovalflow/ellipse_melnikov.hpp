#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "billiard.hpp"
#include "elliptic.hpp"
#include "errors.hpp"
#include "oval_geometry.hpp"

namespace ovalflow {

// Semi-axes in user units together with the confocal normal form (foci at
// +-1) used for elliptic-coordinate work.
struct EllipseParams
{
    double a = 0;
    double b = 0;
    double c = 0;    // focal distance
    double a_c = 0;  // cosh mu0
    double b_c = 0;  // sinh mu0
    double mu0 = 0;
};

inline EllipseParams make_ellipse_params(double a, double b)
{
    if (!(std::isfinite(a) && std::isfinite(b) && b > 0 && a > b))
        throw ConfigError("ellipse parameters need a > b > 0 (no hyperbolic caustics otherwise)");
    EllipseParams e;
    e.a = a;
    e.b = b;
    e.c = std::sqrt((a - b) * (a + b));
    e.a_c = a / e.c;
    e.b_c = b / e.c;
    e.mu0 = std::atanh(b / a);
    return e;
}

enum class Mu1Form
{
    standard,          // -ab / (a^2 cos^2 + b^2 sin^2)^2
    unit_b,            // -ab / (a^2 cos^2 + sin^2)^2
    curvature_normal,  // -ab / (a^2 sin^2 + b^2 cos^2)^2
};

inline double mu1(double phi, double a, double b, Mu1Form form = Mu1Form::standard)
{
    double const c2 = std::cos(phi) * std::cos(phi);
    double const s2 = std::sin(phi) * std::sin(phi);
    double d = 0;
    switch (form)
    {
        case Mu1Form::standard: d = a * a * c2 + b * b * s2; break;
        case Mu1Form::unit_b: d = a * a * c2 + s2; break;
        case Mu1Form::curvature_normal: d = a * a * s2 + b * b * c2; break;
    }
    return -a * b / (d * d);
}

inline double mu1(double phi, EllipseParams const& e, Mu1Form form = Mu1Form::standard)
{
    return mu1(phi, e.a, e.b, form);
}

// Same quantity in the uniformizing variable: -ab / (a^2 cn^2 + b^2 sn^2)^2.
inline double mu1_uniformized(double u, double k, double a, double b)
{
    auto const j = elliptic::jacobi(u, k);
    double const d = a * a * j.cn * j.cn + b * b * j.sn * j.sn;
    return -a * b / (d * d);
}

inline void check_caustic(EllipseParams const& e, double lambda)
{
    if (!(lambda > e.b && lambda < e.a))
        throw ConfigError("caustic parameter must lie strictly between b and a");
}

inline double caustic_modulus(EllipseParams const& e, double lambda)
{
    check_caustic(e, lambda);
    return std::sqrt((e.a - lambda) * (e.a + lambda)) / e.c;
}

// Uniformizing shift per bounce: cos(phi_j) = k sn(t + j delta).
inline double caustic_shift(EllipseParams const& e, double lambda)
{
    return 2.0 * elliptic::elliptic_F(std::asin(e.b / lambda), caustic_modulus(e, lambda));
}

inline double rotation_number(EllipseParams const& e, double lambda)
{
    double const k = caustic_modulus(e, lambda);
    return caustic_shift(e, lambda) / (4.0 * elliptic::elliptic_K(k));
}

struct RotationRange
{
    double low = 0;   // lambda -> a
    double high = 0;  // lambda -> b
};

inline RotationRange rotation_range(EllipseParams const& e)
{
    return {std::asin(e.b / e.a) / pi, 0.5};
}

struct CausticResonance
{
    double lambda = 0;  // user units
    double modulus = 0;
    double quarter_period = 0;
    double delta = 0;
    double zeta = 0;  // amplitude of delta / 2, doubled
    int p = 0;
    int q = 0;
    double closure_residual = 0;
    double tangency_residual = 0;

    [[nodiscard]] int period() const { return 2 * q; }
};

// Elliptic angles of the resonant orbit at phase t (points alternate between
// the upper and lower arcs).
inline std::vector<double> caustic_orbit(CausticResonance const& r, double t)
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(r.period()));
    for (int j = 0; j < r.period(); ++j)
    {
        auto const v = elliptic::jacobi(t + j * r.delta, r.modulus);
        double const s = (j % 2 == 0) ? v.dn : -v.dn;
        out.push_back(std::atan2(s, r.modulus * v.sn));
    }
    return out;
}

namespace detail {

inline PlanePoint ellipse_point(double a, double b, double phi)
{
    return {a * std::cos(phi), b * std::sin(phi)};
}

// Tangent angle of the support parametrization at elliptic angle phi.
inline double tangent_angle(double a, double b, double phi)
{
    return spectral::wrap_angle(std::atan2(b * std::cos(phi), -a * std::sin(phi)));
}

inline double elliptic_angle(double a, double b, PlanePoint x)
{
    return std::atan2(x.y / b, x.x / a);
}

inline std::vector<PlanePoint> unit_chords(std::vector<PlanePoint> const& pts)
{
    std::vector<PlanePoint> u(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j)
    {
        PlanePoint const d = pts[(j + 1) % pts.size()] - pts[j];
        u[j] = (1.0 / norm(d)) * d;
    }
    return u;
}

inline std::vector<PlanePoint> confocal_points(EllipseParams const& e,
                                               std::vector<double> const& orbit)
{
    std::vector<PlanePoint> pts;
    pts.reserve(orbit.size());
    for (double phi : orbit)
        pts.push_back(ellipse_point(e.a_c, e.b_c, phi));
    return pts;
}

}  // namespace detail

// Largest deviation of the chords from tangency to the confocal hyperbola
// x^2/(a^2 - lambda^2) + y^2/(b^2 - lambda^2) = 1, in confocal units.
inline double tangency_residual(EllipseParams const& e, double lambda,
                                std::vector<double> const& orbit)
{
    double const l = lambda / e.c;
    double const ma = 1.0 / (e.a_c * e.a_c - l * l);
    double const mb = 1.0 / (e.b_c * e.b_c - l * l);
    auto const pts = detail::confocal_points(e, orbit);
    auto const u = detail::unit_chords(pts);
    double worst = 0;
    for (std::size_t j = 0; j < pts.size(); ++j)
    {
        PlanePoint const p = pts[j];
        PlanePoint const d = u[j];
        double const pmd = ma * p.x * d.x + mb * p.y * d.y;
        double const dmd = ma * d.x * d.x + mb * d.y * d.y;
        double const pmp = ma * p.x * p.x + mb * p.y * p.y;
        worst = std::max(worst, std::abs(pmd * pmd - dmd * (pmp - 1.0)));
    }
    return worst;
}

// Harmonic count that resolves the ellipse support function to round-off:
// its coefficients decay like exp(-n atanh(b/a)).
inline std::size_t ellipse_harmonics(EllipseParams const& e)
{
    double const n = std::ceil(36.0 / std::atanh(e.b / e.a));
    return static_cast<std::size_t>(std::clamp(n, 16.0, 2048.0));
}

// Follows the billiard from the first chord of the orbit for one period and
// returns the largest distance between iterates and orbit points.
inline double closure_residual(EllipseParams const& e, std::vector<double> const& orbit,
                               std::size_t harmonics = 0)
{
    auto const curve = make_ellipse(e.a, e.b, harmonics ? harmonics : ellipse_harmonics(e));
    std::vector<PlanePoint> pts;
    for (double phi : orbit)
        pts.push_back(detail::ellipse_point(e.a, e.b, phi));
    double const theta0 = detail::tangent_angle(e.a, e.b, orbit[0]);
    PlanePoint const d = pts[1 % pts.size()] - pts[0];
    PhasePoint p{theta0, std::atan2(cross(tangent(theta0), d), dot(tangent(theta0), d))};
    double worst = 0;
    for (std::size_t j = 1; j <= pts.size(); ++j)
    {
        p = reflect(curve, p).to;
        worst = std::max(worst, norm(curve.position(p.theta) - pts[j % pts.size()]));
    }
    return worst / e.c;
}

inline std::optional<CausticResonance> resonance_solve(EllipseParams const& e, int p, int q)
{
    if (p <= 0 || q <= 0 || std::gcd(p, q) != 1)
        throw ConfigError("resonance needs coprime positive p, q");
    double const target = static_cast<double>(p) / (2.0 * q);
    auto const range = rotation_range(e);
    if (!(target > range.low && target < range.high))
        return std::nullopt;
    auto g = [&](double l) { return rotation_number(e, l) - target; };
    double lo = e.b * (1 + 1e-12);
    double hi = e.a * (1 - 1e-12);
    double glo = g(lo);
    double ghi = g(hi);
    if ((glo > 0) == (ghi > 0))
        return std::nullopt;
    std::uintmax_t iters = 200;
    auto const root = boost::math::tools::toms748_solve(
        g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), iters);
    CausticResonance r;
    r.lambda = 0.5 * (root.first + root.second);
    r.modulus = caustic_modulus(e, r.lambda);
    r.quarter_period = elliptic::elliptic_K(r.modulus);
    r.delta = caustic_shift(e, r.lambda);
    r.zeta = 2.0 * std::asin(elliptic::jacobi(0.5 * r.delta, r.modulus).sn);
    r.p = p;
    r.q = q;
    auto const orbit = caustic_orbit(r, r.delta / 3.0);
    r.closure_residual = closure_residual(e, orbit);
    r.tangency_residual = tangency_residual(e, r.lambda, orbit);
    if (r.closure_residual > 1e-6)
        throw NumericalError("resonance_solve: resonant orbit does not close (residual " +
                             std::to_string(r.closure_residual) + ")");
    return r;
}

// Largest deviation from ab <p_{j-1} - p_j, D^{-2} X0(phi_j)> = 2 lambda with
// D = diag(a, b), in confocal units.
inline double chord_identity_residual(EllipseParams const& e, CausticResonance const& r,
                               std::vector<double> const& orbit)
{
    if (orbit.size() < 2)
        throw ConfigError("chord_identity_residual: orbit needs at least two points");
    auto const pts = detail::confocal_points(e, orbit);
    auto const u = detail::unit_chords(pts);
    std::size_t const n = pts.size();
    double const a = e.a_c;
    double const b = e.b_c;
    double const l = r.lambda / e.c;
    double worst = 0;
    for (std::size_t j = 0; j < n; ++j)
    {
        PlanePoint const in = u[(j + n - 1) % n];
        PlanePoint const out = u[j];
        PlanePoint const nrm{pts[j].x / (a * a), pts[j].y / (b * b)};
        double const law = std::abs(dot(in, nrm) + dot(out, nrm)) / norm(nrm);
        if (law > 1e-6)
            throw NumericalError("chord_identity_residual: orbit is not a closed billiard orbit");
        double const v = a * b * dot(in - out, nrm);
        worst = std::max(worst, std::abs(v - 2.0 * l));
    }
    return worst;
}

struct LengthVariationCheck
{
    double direct = 0;             // sum of <X1(phi_j), p_{j-1} - p_j>
    double finite_difference = 0;  // d/d eps of the perimeter of the deformed polygon
    double reduced = 0;            // 2 lambda sum mu1(phi_j)

    [[nodiscard]] double residual() const
    {
        return std::max(std::abs(direct - reduced), std::abs(finite_difference - reduced));
    }
};

// First-order length change of the orbit polygon under X0 + eps X1 with
// X1 = ab mu1 D^{-2} X0 (the elliptic-coordinate variation), confocal units.
inline LengthVariationCheck length_variation_check(EllipseParams const& e, CausticResonance const& r,
                                std::vector<double> const& orbit,
                                Mu1Form form = Mu1Form::standard, double eps = 1e-5)
{
    double const a = e.a_c;
    double const b = e.b_c;
    auto const pts = detail::confocal_points(e, orbit);
    auto const u = detail::unit_chords(pts);
    std::size_t const n = pts.size();
    std::vector<PlanePoint> x1(n);
    LengthVariationCheck out;
    for (std::size_t j = 0; j < n; ++j)
    {
        double const m = mu1(orbit[j], a, b, form);
        x1[j] = {m * b * std::cos(orbit[j]), m * a * std::sin(orbit[j])};
        out.reduced += m;
    }
    out.reduced *= 2.0 * r.lambda / e.c;
    auto perimeter = [&](double s) {
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j)
        {
            std::size_t const k = (j + 1) % n;
            sum += norm((pts[k] + s * x1[k]) - (pts[j] + s * x1[j]));
        }
        return sum;
    };
    for (std::size_t j = 0; j < n; ++j)
        out.direct += dot(x1[j], u[(j + n - 1) % n] - u[j]);
    out.finite_difference = (perimeter(eps) - perimeter(-eps)) / (2.0 * eps);
    return out;
}

struct MelnikovOptions
{
    Mu1Form form = Mu1Form::standard;
    std::size_t harmonics = 0;         // ellipse resolution for the midpoint solves, 0: automatic
    std::size_t coarse_harmonics = 0;  // second resolution for the noise floor, 0: half of it
};

// W1 at phase t on a prepared confocal ellipse: even points from the caustic
// flow, odd points from the critical-chord condition between their neighbours.
inline double melnikov_potential(SupportCurve const& confocal, EllipseParams const& e,
                                 CausticResonance const& r, double t,
                                 Mu1Form form = Mu1Form::standard)
{
    auto const exact = caustic_orbit(r, t);
    int const n = r.period();
    double const a = e.a_c;
    double const b = e.b_c;
    double sum = 0;
    for (int j = 0; j < n; j += 2)
    {
        sum += mu1(exact[j], a, b, form);
        double const ta = detail::tangent_angle(a, b, exact[j]);
        double const tc = detail::tangent_angle(a, b, exact[(j + 2) % n]);
        double const guess = detail::tangent_angle(a, b, exact[j + 1]);
        MidpointOptions opt;
        opt.hint = guess;
        double const span = spectral::wrap_angle(tc - ta);
        if (span != 0.0 && spectral::wrap_angle(guess - ta) > span)
            opt.arc = MidpointArc::complementary;
        double tb = 0;
        try
        {
            tb = midpoint_solve(confocal, ta, tc, opt);
        }
        catch (NumericalError const& err)
        {
            throw NumericalError("melnikov_potential: midpoint " + std::to_string(j + 1) + ": " +
                                 err.what());
        }
        sum += mu1(detail::elliptic_angle(a, b, confocal.position(tb)), a, b, form);
    }
    return 2.0 * r.lambda * sum;
}

inline double melnikov_potential(EllipseParams const& e, CausticResonance const& r, double t,
                                 MelnikovOptions const& opt = {})
{
    std::size_t const n = opt.harmonics ? opt.harmonics : 2 * ellipse_harmonics(e);
    return melnikov_potential(make_ellipse(e.a_c, e.b_c, n), e, r, t, opt.form);
}

struct MelnikovSample
{
    double t = 0;
    double w = 0;
};

struct MelnikovCurve
{
    std::vector<MelnikovSample> samples;
    double amplitude = 0;
    double noise_floor = 0;
    bool destroyed = false;
};

inline MelnikovCurve melnikov_curve(EllipseParams const& e, CausticResonance const& r,
                                    std::size_t samples, MelnikovOptions const& opt = {})
{
    if (samples < 16)
        throw ConfigError("melnikov_curve: at least 16 samples required");
    std::size_t const n = opt.harmonics ? opt.harmonics : 2 * ellipse_harmonics(e);
    auto const fine = make_ellipse(e.a_c, e.b_c, n);
    auto const coarse = make_ellipse(e.a_c, e.b_c, opt.coarse_harmonics ? opt.coarse_harmonics : n / 2);
    MelnikovCurve out;
    double lo = 1e300;
    double hi = -1e300;
    double diff = 0;
    double scale = 0;
    for (std::size_t i = 0; i < samples; ++i)
    {
        double const t = r.delta * static_cast<double>(i) / static_cast<double>(samples);
        double const w = melnikov_potential(fine, e, r, t, opt.form);
        double const wc = melnikov_potential(coarse, e, r, t, opt.form);
        out.samples.push_back({t, w});
        lo = std::min(lo, w);
        hi = std::max(hi, w);
        diff = std::max(diff, std::abs(w - wc));
        scale = std::max(scale, std::abs(w));
    }
    out.amplitude = hi - lo;
    out.noise_floor = diff + 64.0 * std::numeric_limits<double>::epsilon() * scale;
    out.destroyed = out.amplitude > 10.0 * out.noise_floor;
    return out;
}

}  // namespace ovalflow
