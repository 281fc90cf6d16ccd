#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "billiard.hpp"
#include "csf_flow.hpp"
#include "errors.hpp"
#include "oval_geometry.hpp"

namespace ovalflow {

enum class OrbitClass
{
    hyperbolic,
    elliptic,
    parabolic
};

inline char const* to_string(OrbitClass k)
{
    switch (k)
    {
        case OrbitClass::hyperbolic: return "hyperbolic";
        case OrbitClass::elliptic: return "elliptic";
        case OrbitClass::parabolic: return "parabolic";
    }
    return "?";
}

struct DiameterTolerances
{
    double root = 1e-10;           // |f| accepted at a root
    double parabolic_rel = 1e-8;   // |f'| <= parabolic_rel (1 + l) is parabolic
    double continuum_rel = 1e-9;   // max |f| <= continuum_rel * perimeter
};

struct DiameterOrbit
{
    double theta = 0;  // representative in [0, pi)
    double length = 0;
    OrbitClass klass = OrbitClass::parabolic;
    double residual = 0;
    double f_prime = 0;
};

struct DiameterScan
{
    bool continuum = false;
    std::vector<DiameterOrbit> orbits;
};

// f = <T(theta), X(theta + pi) - X(theta)> = -h'(theta + pi) - h'(theta).
// Only even harmonics contribute, so f is pi-periodic.
inline double pair_function(SupportCurve const& c, double theta)
{
    return -c.eval(theta + pi).dh - c.eval(theta).dh;
}

// f' = h(theta) + h(theta + pi) - R(theta) - R(theta + pi).
inline double pair_derivative(SupportCurve const& c, double theta)
{
    auto const a = c.eval(theta);
    auto const b = c.eval(theta + pi);
    return a.h + b.h - a.radius - b.radius;
}

// Class of the diameter at a root of f from D = l - (R1 + R2) and
// P = (l - R1)(l - R2): elliptic iff D < 0 < P, hyperbolic iff D > 0 or P < 0.
inline OrbitClass classify_diameter(SupportCurve const& c, double theta,
                                    DiameterTolerances const& tol = {})
{
    auto const a = c.eval(theta);
    auto const b = c.eval(theta + pi);
    double const l = a.h + b.h;
    double const d = l - a.radius - b.radius;
    double const p = (l - a.radius) * (l - b.radius);
    double const eps = tol.parabolic_rel * (1.0 + l);
    if (std::abs(d) <= eps || std::abs(p) <= eps * l)
        return OrbitClass::parabolic;
    if (d > 0 || p < 0)
        return OrbitClass::hyperbolic;
    return OrbitClass::elliptic;
}

// Trace of D(B^2) at the diameter through theta.
inline double stability_trace(SupportCurve const& c, double theta)
{
    auto const r1 = reflect(c, {theta, pi / 2});
    auto const r2 = reflect(c, r1.to);
    return (jacobian(c, r2) * jacobian(c, r1)).trace();
}

namespace detail {

inline double refine_pair_root(SupportCurve const& c, double lo, double hi)
{
    auto f = [&](double t) { return std::make_pair(pair_function(c, t), pair_derivative(c, t)); };
    double const flo = pair_function(c, lo);
    double const fhi = pair_function(c, hi);
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    std::uintmax_t iters = 100;
    auto g = [&](double t) { return pair_function(c, t); };
    auto const r = boost::math::tools::toms748_solve(
        g, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
    double const mid = 0.5 * (r.first + r.second);
    iters = 20;
    return boost::math::tools::newton_raphson_iterate(f, mid, lo, hi, 52, iters);
}

inline double newton_pair_root(SupportCurve const& c, double guess)
{
    auto f = [&](double t) { return std::make_pair(pair_function(c, t), pair_derivative(c, t)); };
    std::uintmax_t iters = 30;
    return boost::math::tools::newton_raphson_iterate(f, guess, guess - 1e-3, guess + 1e-3, 52,
                                                      iters);
}

inline double wrap_half_turn(double t)
{
    double r = std::fmod(t, pi);
    if (r < 0)
        r += pi;
    if (r >= pi)
        r = 0.0;
    return r;
}

inline DiameterOrbit make_diameter(SupportCurve const& c, double theta,
                                   DiameterTolerances const& tol)
{
    DiameterOrbit o;
    o.theta = wrap_half_turn(theta);
    o.length = width(c, o.theta);
    o.klass = classify_diameter(c, o.theta, tol);
    o.residual = std::abs(pair_function(c, o.theta));
    o.f_prime = pair_derivative(c, o.theta);
    return o;
}

}  // namespace detail

// All roots of f in [0, pi), or the continuum flag for curves of constant width.
inline DiameterScan find_diameters(SupportCurve const& c, DiameterTolerances const& tol = {})
{
    std::size_t const m = c.grid_size() / 2;
    std::vector<double> f(m + 1);
    double fmax = 0;
    for (std::size_t j = 0; j <= m; ++j)
    {
        f[j] = pair_function(c, pi * static_cast<double>(j) / static_cast<double>(m));
        fmax = std::max(fmax, std::abs(f[j]));
    }
    DiameterScan scan;
    if (fmax <= tol.continuum_rel * c.perimeter())
    {
        scan.continuum = true;
        return scan;
    }
    double const zero = 1e-13 * fmax;
    std::vector<double> roots;
    for (std::size_t j = 0; j < m; ++j)
    {
        double const t0 = pi * static_cast<double>(j) / static_cast<double>(m);
        double const t1 = pi * static_cast<double>(j + 1) / static_cast<double>(m);
        if (std::abs(f[j]) <= zero)
            roots.push_back(detail::newton_pair_root(c, t0));
        else if (std::abs(f[j + 1]) > zero && (f[j] > 0) != (f[j + 1] > 0))
            roots.push_back(detail::refine_pair_root(c, t0, t1));
    }
    for (double r : roots)
    {
        auto o = detail::make_diameter(c, r, tol);
        if (o.residual > tol.root)
            throw NumericalError("diameter root did not converge");
        bool dup = false;
        for (auto const& q : scan.orbits)
            dup = dup || std::abs(spectral::angle_difference(2 * q.theta, 2 * o.theta)) < 1e-9;
        if (!dup)
            scan.orbits.push_back(o);
    }
    std::sort(scan.orbits.begin(), scan.orbits.end(),
              [](auto const& x, auto const& y) { return x.theta < y.theta; });
    return scan;
}

// d/dt f under h_t = h - k: f_t = f + k'(theta + pi) + k'(theta), k' = -R'/R^2.
inline double f_time_derivative(SupportCurve const& c, double theta)
{
    auto const a = c.eval(theta);
    auto const b = c.eval(theta + pi);
    double const g = -a.radius_prime / (a.radius * a.radius)
                     - b.radius_prime / (b.radius * b.radius);
    return pair_function(c, theta) + g;
}

namespace detail {

inline std::size_t snapshot_index(FlowTrajectory const& traj, double t)
{
    for (std::size_t i = 0; i < traj.states.size(); ++i)
        if (std::abs(traj.states[i].t - t) <= 1e-9 * (1.0 + std::abs(t)))
            return i;
    if (traj.states.empty() || t < traj.states.front().t || t > traj.states.back().t)
        throw ConfigError("time " + std::to_string(t) + " outside trajectory span");
    throw ConfigError("time " + std::to_string(t) + " is not a snapshot time");
}

}  // namespace detail

// f(t) = e^{t - t0} f(t0) + int_{t0}^{t} e^{t - s} [k'(s, theta + pi) + k'(s, theta)] ds,
// with the integral by the trapezoid rule over the snapshots.
inline double integrated_f(FlowTrajectory const& traj, double theta, double t0, double t)
{
    std::size_t const i0 = detail::snapshot_index(traj, t0);
    std::size_t const i1 = detail::snapshot_index(traj, t);
    if (i1 < i0)
        throw ConfigError("integrated_f needs t >= t0");
    double const tt = traj.states[i1].t;
    auto g = [&](std::size_t i) {
        auto const& c = traj.states[i].curve;
        return f_time_derivative(c, theta) - pair_function(c, theta);
    };
    double integral = 0;
    double prev = std::exp(tt - traj.states[i0].t) * g(i0);
    for (std::size_t i = i0 + 1; i <= i1; ++i)
    {
        double const cur = std::exp(tt - traj.states[i].t) * g(i);
        integral += 0.5 * (traj.states[i].t - traj.states[i - 1].t) * (prev + cur);
        prev = cur;
    }
    return std::exp(tt - traj.states[i0].t) * pair_function(traj.states[i0].curve, theta)
           + integral;
}

struct BranchSample
{
    double t = 0;
    double theta = 0;
    OrbitClass klass = OrbitClass::parabolic;
    double f_prime = 0;
    double length = 0;
};

enum class BranchEvent
{
    survived,
    collided,
    lost_root
};

inline char const* to_string(BranchEvent e)
{
    switch (e)
    {
        case BranchEvent::survived: return "survived";
        case BranchEvent::collided: return "collided";
        case BranchEvent::lost_root: return "lost_root";
    }
    return "?";
}

struct DiameterBranch
{
    std::vector<BranchSample> samples;
    BranchEvent terminal_event = BranchEvent::survived;
};

struct ContinuationSettings
{
    double max_jump = 0.25;  // largest accepted theta change between snapshots
    DiameterTolerances tol;
};

namespace detail {

inline BranchSample branch_sample(SupportCurve const& c, double t, double theta,
                                  DiameterTolerances const& tol)
{
    return {t, theta, classify_diameter(c, theta, tol), pair_derivative(c, theta),
            width(c, theta)};
}

// Newton from a guess with step control; returns false on divergence.
inline bool newton_on_pair(SupportCurve const& c, double& theta, double tol)
{
    for (int it = 0; it < 50; ++it)
    {
        double const f = pair_function(c, theta);
        double const d = pair_derivative(c, theta);
        if (std::abs(f) <= tol && it > 0)
            return true;
        if (d == 0.0)
            return false;
        double step = -f / d;
        step = std::clamp(step, -0.05, 0.05);
        theta += step;
        if (std::abs(step) < 1e-15)
            return std::abs(pair_function(c, theta)) <= tol;
    }
    return std::abs(pair_function(c, theta)) <= tol;
}

}  // namespace detail

// Follow a diameter through the snapshots of a trajectory. The predictor
// uses the implicit-function slope -f_t / f'; near-parabolic points fall back
// to a bracketing search in a window around the last root.
inline DiameterBranch continue_branch(FlowTrajectory const& traj, DiameterOrbit const& seed,
                                      ContinuationSettings const& cs = {})
{
    DiameterBranch br;
    if (traj.states.empty())
        return br;
    auto const& c0 = traj.states.front().curve;
    if (std::abs(pair_function(c0, seed.theta)) > cs.tol.root)
        throw NumericalError("branch seed is not a root at the first snapshot");
    double theta = seed.theta;
    br.samples.push_back(detail::branch_sample(c0, traj.states.front().t, theta, cs.tol));
    for (std::size_t i = 1; i < traj.states.size(); ++i)
    {
        auto const& prev = traj.states[i - 1];
        auto const& cur = traj.states[i];
        double const dt = cur.t - prev.t;
        double const fp = pair_derivative(prev.curve, theta);
        double const l = width(prev.curve, theta);
        bool const near_parabolic = std::abs(fp) <= 1e3 * cs.tol.parabolic_rel * (1 + l);
        double guess = theta;
        if (!near_parabolic)
            guess = theta - dt * f_time_derivative(prev.curve, theta) / fp;
        double next = guess;
        bool ok = detail::newton_on_pair(cur.curve, next, cs.tol.root)
                  && std::abs(next - theta) <= cs.max_jump;
        if (!ok)
        {
            // Bracketing search around the previous root.
            int const n = 64;
            double best = 0;
            bool found = false;
            double fa = pair_function(cur.curve, theta - cs.max_jump);
            for (int k = 1; k <= n; ++k)
            {
                double const ta = theta - cs.max_jump + 2 * cs.max_jump * (k - 1) / n;
                double const tb = theta - cs.max_jump + 2 * cs.max_jump * k / n;
                double const fb = pair_function(cur.curve, tb);
                if ((fa > 0) != (fb > 0))
                {
                    double const r = detail::refine_pair_root(cur.curve, ta, tb);
                    if (!found || std::abs(r - theta) < std::abs(best - theta))
                        best = r;
                    found = true;
                }
                fa = fb;
            }
            if (found)
            {
                next = best;
                ok = true;
            }
        }
        if (!ok)
        {
            double const rel = std::abs(br.samples.back().f_prime)
                               / (1.0 + br.samples.back().length);
            br.terminal_event = rel < 0.05 ? BranchEvent::collided : BranchEvent::lost_root;
            return br;
        }
        theta = next;
        br.samples.push_back(detail::branch_sample(cur.curve, cur.t, theta, cs.tol));
    }
    br.terminal_event = BranchEvent::survived;
    return br;
}

// |E(theta + pi) - E(theta)| at a root of f; zero iff the diameter is parabolic.
inline double parabolic_witness(SupportCurve const& c, double theta,
                                DiameterTolerances const& tol = {})
{
    if (std::abs(pair_function(c, theta)) > tol.root)
        throw NumericalError("parabolic_witness: theta is not a root of the pair function");
    return norm(evolute(c, theta + pi) - evolute(c, theta));
}

}  // namespace ovalflow
