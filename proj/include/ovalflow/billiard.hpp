#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "oval_geometry.hpp"

namespace ovalflow {

// Billiard coordinates: tangent angle of the boundary point and the angle of
// the outgoing ray measured from T(theta) towards the interior.
struct PhasePoint
{
    double theta = 0;
    double phi = 0;
};

struct BounceRecord
{
    PhasePoint from;
    PhasePoint to;
    double chord = 0;
    double x_in = 0;   // R(theta) sin(phi) at the start
    double x_out = 0;  // R(theta1) sin(phi1) at the end
};

struct Matrix2
{
    double a11 = 1, a12 = 0, a21 = 0, a22 = 1;

    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
};

inline Matrix2 operator*(Matrix2 const& a, Matrix2 const& b)
{
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}

inline constexpr double grazing_guard = 1e-6;

inline void check_phase(PhasePoint p)
{
    if (!(p.phi > grazing_guard && p.phi < pi - grazing_guard))
        throw GrazingError("phase angle " + std::to_string(p.phi) + " is grazing or outside (0, pi)");
}

// Unit direction cos(phi) T(theta) + sin(phi) N(theta).
inline PlanePoint ray_direction(PhasePoint p) { return tangent(p.theta + p.phi); }

inline BounceRecord reflect(SupportCurve const& c, PhasePoint p)
{
    check_phase(p);
    double const theta = spectral::wrap_angle(p.theta);
    double const phi = p.phi;
    PlanePoint const x0 = c.position(theta);
    PlanePoint const v = ray_direction({theta, phi});
    auto g = [&](double s) { return cross(c.position(s) - x0, v); };
    // The chord to X(theta + e) turns by less than e, so the cross product is
    // positive at e = phi/2 and negative at 2 pi - (pi - phi)/2.
    double lo = theta + 0.5 * phi;
    double hi = theta + two_pi - 0.5 * (pi - phi);
    double glo = g(lo);
    double ghi = g(hi);
    if (!(glo > 0 && ghi < 0))
        throw NumericalError("reflect: far intersection not bracketed");
    std::uintmax_t iters = 200;
    auto const r = boost::math::tools::toms748_solve(
        g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), iters);
    double t1 = 0.5 * (r.first + r.second);
    // One Newton polish; g'(s) = R(s) (T(s) x v).
    double const d = c.radius(t1) * cross(tangent(t1), v);
    if (d != 0)
    {
        double const t2 = t1 - g(t1) / d;
        if (t2 > lo && t2 < hi)
            t1 = t2;
    }
    PlanePoint const x1 = c.position(t1);
    double const phi1 = std::atan2(-dot(v, normal(t1)), dot(v, tangent(t1)));
    BounceRecord rec;
    rec.from = {theta, phi};
    rec.to = {spectral::wrap_angle(t1), phi1};
    rec.chord = norm(x1 - x0);
    rec.x_in = c.radius(theta) * std::sin(phi);
    rec.x_out = c.radius(t1) * std::sin(phi1);
    return rec;
}

// Reversing involution (theta, phi) -> (theta, pi - phi).
inline PhasePoint involution(PhasePoint p) { return {p.theta, pi - p.phi}; }

inline BounceRecord reflect_inverse(SupportCurve const& c, PhasePoint p)
{
    auto rec = reflect(c, involution(p));
    rec.from = involution(rec.from);
    rec.to = involution(rec.to);
    std::swap(rec.from, rec.to);
    std::swap(rec.x_in, rec.x_out);
    return rec;
}

// Derivative of the billiard map in (theta, phi) coordinates.
// Its determinant is x_in / x_out.
inline Matrix2 jacobian(SupportCurve const&, BounceRecord const& r)
{
    double const l = r.chord;
    double const x0 = r.x_in;
    double const x1 = r.x_out;
    return {(l - x0) / x1, l / x1, (l - x0 - x1) / x1, (l - x1) / x1};
}

// Derivative in the area-preserving coordinates (s, -cos phi); determinant 1.
inline Matrix2 symplectic_jacobian(SupportCurve const& c, BounceRecord const& r)
{
    Matrix2 const d = jacobian(c, r);
    double const r0 = c.radius(r.from.theta);
    double const r1 = c.radius(r.to.theta);
    double const s0 = std::sin(r.from.phi);
    double const s1 = std::sin(r.to.phi);
    return {r1 * d.a11 / r0, r1 * d.a12 / s0, s1 * d.a21 / r0, s1 * d.a22 / s0};
}

inline std::vector<BounceRecord> orbit(SupportCurve const& c, PhasePoint p, std::size_t steps)
{
    std::vector<BounceRecord> out;
    out.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i)
    {
        out.push_back(reflect(c, p));
        p = out.back().to;
    }
    return out;
}

struct GeneratingLength
{
    double length = 0;
    double d_first = 0;   // dL/ds  = -cos(phi)
    double d_second = 0;  // dL/ds1 =  cos(phi1)
};

inline GeneratingLength generating_length_angles(SupportCurve const& c, double theta,
                                                 double theta1)
{
    PlanePoint const x0 = c.position(theta);
    PlanePoint const x1 = c.position(theta1);
    double const l = norm(x1 - x0);
    if (!(l > 1e-14 * c.perimeter()))
        throw NumericalError("generating function at coincident points");
    PlanePoint const u = (1.0 / l) * (x1 - x0);
    return {l, -dot(u, tangent(theta)), dot(u, tangent(theta1))};
}

// L(s, s1) = |X(s1) - X(s)| with arclength arguments.
inline GeneratingLength generating_length(SupportCurve const& c, double s, double s1)
{
    return generating_length_angles(c, c.angle_at_arclength(s), c.angle_at_arclength(s1));
}

namespace detail {

struct Triple
{
    double l1, l2, sin_phi, curvature;
    PlanePoint u1, u2;
    double t1;
};

inline Triple triple(SupportCurve const& c, double s, double s1, double s2)
{
    double const t0 = c.angle_at_arclength(s);
    double const t1 = c.angle_at_arclength(s1);
    double const t2 = c.angle_at_arclength(s2);
    PlanePoint const x0 = c.position(t0);
    PlanePoint const x1 = c.position(t1);
    PlanePoint const x2 = c.position(t2);
    double const l1 = norm(x1 - x0);
    double const l2 = norm(x2 - x1);
    if (!(l1 > 0 && l2 > 0))
        throw NumericalError("degenerate triple");
    PlanePoint const u1 = (1.0 / l1) * (x1 - x0);
    PlanePoint const u2 = (1.0 / l2) * (x2 - x1);
    return {l1, l2, dot(u2, normal(t1)), 1.0 / c.radius(t1), u1, u2, t1};
}

}  // namespace detail

// 2 sin(phi) [sin(phi) (1/L + 1/L') + k(s1)], phi the angle at s1.
inline double twist_positivity(SupportCurve const& c, double s, double s1, double s2)
{
    auto const t = detail::triple(c, s, s1, s2);
    return 2.0 * t.sin_phi * (t.sin_phi * (1.0 / t.l1 + 1.0 / t.l2) + t.curvature);
}

// d^2/ds1^2 [L(s, s1) + L(s1, s2)]. On a reflection triple this is
// sin(phi) [sin(phi) (1/L + 1/L') - 2 k(s1)].
inline double twist_second_derivative(SupportCurve const& c, double s, double s1, double s2)
{
    auto const t = detail::triple(c, s, s1, s2);
    PlanePoint const T = tangent(t.t1);
    PlanePoint const N = normal(t.t1);
    double const c1 = dot(t.u1, T);
    double const c2 = dot(t.u2, T);
    return (1.0 - c1 * c1) / t.l1 + t.curvature * dot(t.u1, N) + (1.0 - c2 * c2) / t.l2
           - t.curvature * dot(t.u2, N);
}

enum class MidpointArc
{
    counterclockwise,  // theta_b in (theta_a, theta_c) in cyclic order
    complementary      // theta_b in (theta_c, theta_a)
};

struct MidpointOptions
{
    MidpointArc arc = MidpointArc::counterclockwise;
    std::optional<double> hint;  // root closest to this angle wins
    std::size_t scan_points = 0;  // 0: chosen from the harmonic count
};

// Solve d/d theta_b [L(a, b) + L(b, c)] = 0 on the requested arc. Critical
// points are bracketed by a scan and refined; with several roots the one
// nearest the hint (default: arc midpoint) is returned, in [0, 2 pi).
inline double midpoint_solve(SupportCurve const& c, double theta_a, double theta_c,
                             MidpointOptions const& opt = {})
{
    // Coincident end points: both arcs are the full circle and the critical
    // chords are those normal at the middle point.
    double delta = spectral::wrap_angle(theta_c - theta_a);
    if (delta == 0.0)
        delta = two_pi;
    double start = theta_a;
    double span = delta;
    if (opt.arc == MidpointArc::complementary && delta < two_pi)
    {
        start = theta_a + delta;
        span = two_pi - delta;
    }
    PlanePoint const xa = c.position(theta_a);
    PlanePoint const xc = c.position(theta_c);
    auto gfun = [&](double tb) {
        PlanePoint const xb = c.position(tb);
        PlanePoint const d1 = xb - xa;
        PlanePoint const d2 = xc - xb;
        PlanePoint const tt = tangent(tb);
        return dot(d1, tt) / norm(d1) - dot(d2, tt) / norm(d2);
    };
    std::size_t const k = opt.scan_points ? opt.scan_points
                                          : std::max<std::size_t>(64, 8 * c.harmonic_count());
    double const target = opt.hint ? *opt.hint : start + 0.5 * span;
    std::optional<double> best;
    double best_dist = 1e300;
    double prev_t = start + span * 0.5 / static_cast<double>(k);
    double prev_g = gfun(prev_t);
    for (std::size_t i = 1; i < k; ++i)
    {
        double const t = start + span * (static_cast<double>(i) + 0.5) / static_cast<double>(k);
        double const gv = gfun(t);
        if (prev_g == 0.0 || (prev_g > 0) != (gv > 0))
        {
            double root = prev_t;
            if (prev_g != 0.0)
            {
                std::uintmax_t iters = 200;
                auto const r = boost::math::tools::toms748_solve(
                    gfun, prev_t, t, prev_g, gv, boost::math::tools::eps_tolerance<double>(52),
                    iters);
                root = 0.5 * (r.first + r.second);
            }
            double const dist = std::abs(spectral::angle_difference(root, target));
            if (dist < best_dist)
            {
                best_dist = dist;
                best = root;
            }
        }
        prev_t = t;
        prev_g = gv;
    }
    if (!best)
        throw NumericalError("midpoint_solve: no critical chord found on the arc");
    return spectral::wrap_angle(*best);
}

struct ComposedGenerating
{
    double value = 0;
    double theta_b = 0;
    double d_theta_a = 0;  // -cos(entry angle) R(theta_a)
    double d_theta_c = 0;  //  cos(exit angle) R(theta_c)
};

inline ComposedGenerating composed_generating(SupportCurve const& c, double theta_a,
                                              double theta_c, MidpointOptions const& opt = {})
{
    double const tb = midpoint_solve(c, theta_a, theta_c, opt);
    auto const g1 = generating_length_angles(c, theta_a, tb);
    auto const g2 = generating_length_angles(c, tb, theta_c);
    return {g1.length + g2.length, tb, g1.d_first * c.radius(theta_a),
            g2.d_second * c.radius(theta_c)};
}

}  // namespace ovalflow
