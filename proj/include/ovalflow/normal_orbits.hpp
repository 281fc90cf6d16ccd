#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "billiard.hpp"
#include "errors.hpp"
#include "oval_geometry.hpp"

namespace ovalflow {

inline constexpr int default_max_bounces = 64;

// m-fold reflection of the perpendicular phase point (theta, pi/2) with the
// derivative (A'_j, phi'_j) propagated through the bounce Jacobians.
// Index j runs over 0..m; angles are unwrapped (A_j increases with j).
struct WavefrontState
{
    int m = 0;
    std::vector<double> angles;
    std::vector<double> phis;
    std::vector<double> dA;
    std::vector<double> dphi;
    std::vector<double> chords;    // l_0 .. l_{m-1}
    std::vector<double> x_values;  // x_j = R(A_j) sin(phi_j)

    double A() const { return angles.back(); }
    double phi() const { return phis.back(); }
    double dA_m() const { return dA.back(); }
    double dphi_m() const { return dphi.back(); }
};

inline WavefrontState wavefront(SupportCurve const& c, double theta, int m,
                                int max_bounces = default_max_bounces)
{
    if (m < 0 || m > max_bounces)
        throw ConfigError("wavefront: bounce count out of range");
    WavefrontState w;
    w.m = m;
    w.angles.push_back(theta);
    w.phis.push_back(pi / 2);
    w.dA.push_back(1.0);
    w.dphi.push_back(0.0);
    w.x_values.push_back(c.radius(theta));
    PhasePoint p{theta, pi / 2};
    for (int j = 0; j < m; ++j)
    {
        BounceRecord rec;
        try
        {
            rec = reflect(c, p);
        }
        catch (GrazingError const& e)
        {
            throw GrazingError(std::string(e.what()) + " at bounce " + std::to_string(j));
        }
        Matrix2 const d = jacobian(c, rec);
        double const a = w.dA.back();
        double const f = w.dphi.back();
        w.dA.push_back(d.a11 * a + d.a12 * f);
        w.dphi.push_back(d.a21 * a + d.a22 * f);
        w.angles.push_back(w.angles.back() + spectral::wrap_angle(rec.to.theta - rec.from.theta));
        w.phis.push_back(rec.to.phi);
        w.chords.push_back(rec.chord);
        w.x_values.push_back(rec.x_out);
        p = rec.to;
    }
    return w;
}

// A'_1 = -(l - R(theta)) / (R(A_1) <T(A_1), T(theta)>), l the normal chord.
inline double a1_derivative(SupportCurve const& c, double theta)
{
    auto const rec = reflect(c, {theta, pi / 2});
    double const tt = dot(tangent(rec.to.theta), tangent(theta));
    if (tt == 0.0)
        throw NumericalError("a1_derivative: orthogonal tangents on a normal chord");
    return -(rec.chord - c.radius(theta)) / (c.radius(rec.to.theta) * tt);
}

struct NormalOrbit
{
    double theta0 = 0;
    double theta1 = 0;  // A_n(theta0) in [0, 2 pi)
    int n = 0;
    double residual = 0;
    bool reducible = false;
    int first_return = 0;  // first j >= 1 with phi_j = pi/2
};

struct NormalOrbitScan
{
    bool continuum = false;
    std::vector<NormalOrbit> orbits;

    std::size_t irreducible_count() const
    {
        return static_cast<std::size_t>(std::count_if(
            orbits.begin(), orbits.end(), [](auto const& o) { return !o.reducible; }));
    }
};

struct NormalOrbitOptions
{
    std::size_t scan_points = 4096;
    double continuum_tol = 1e-9;
    double residual_tol = 1e-9;
    double perpendicular_tol = 1e-7;
    int max_bounces = default_max_bounces;
};

// Roots of g_n(theta) = phi_n(theta) - pi/2: orbits leaving and returning
// perpendicularly after n bounces. Each orbit is reported once.
inline NormalOrbitScan np_detect(SupportCurve const& c, int n, NormalOrbitOptions const& opt = {})
{
    if (n < 1 || n > opt.max_bounces)
        throw ConfigError("np_detect: n out of range");
    std::size_t const k = opt.scan_points;
    std::vector<double> g(k + 1);
    double gmax = 0;
    for (std::size_t j = 0; j < k; ++j)
    {
        g[j] = wavefront(c, two_pi * static_cast<double>(j) / static_cast<double>(k), n).phi()
               - pi / 2;
        gmax = std::max(gmax, std::abs(g[j]));
    }
    g[k] = g[0];
    NormalOrbitScan scan;
    if (gmax <= opt.continuum_tol)
    {
        scan.continuum = true;
        return scan;
    }
    auto gfun = [&](double t) {
        auto const w = wavefront(c, t, n);
        return std::make_pair(w.phi() - pi / 2, w.dphi_m());
    };
    double const zero = 1e-13;
    std::vector<double> roots;
    for (std::size_t j = 0; j < k; ++j)
    {
        double const t0 = two_pi * static_cast<double>(j) / static_cast<double>(k);
        double const t1 = two_pi * static_cast<double>(j + 1) / static_cast<double>(k);
        if (std::abs(g[j]) <= zero)
        {
            roots.push_back(t0);
        }
        else if (std::abs(g[j + 1]) > zero && (g[j] > 0) != (g[j + 1] > 0))
        {
            std::uintmax_t iters = 60;
            roots.push_back(boost::math::tools::newton_raphson_iterate(
                gfun, 0.5 * (t0 + t1), t0, t1, 50, iters));
        }
    }
    std::vector<double> seen;
    auto known = [&](double t) {
        for (double s : seen)
            if (std::abs(spectral::angle_difference(s, t)) < 1e-7)
                return true;
        return false;
    };
    for (double r : roots)
    {
        double const t = spectral::wrap_angle(r);
        if (known(t))
            continue;
        auto const w = wavefront(c, t, n);
        NormalOrbit o;
        o.theta0 = t;
        o.theta1 = spectral::wrap_angle(w.A());
        o.n = n;
        o.residual = std::abs(w.phi() - pi / 2);
        o.first_return = n;
        for (int j = 1; j < n; ++j)
        {
            if (std::abs(w.phis[j] - pi / 2) < opt.perpendicular_tol)
            {
                o.first_return = j;
                break;
            }
        }
        o.reducible = o.first_return < n;
        if (o.residual > opt.residual_tol)
            continue;
        for (int j = 0; j <= n; ++j)
            if (std::abs(w.phis[j] - pi / 2) < opt.perpendicular_tol)
                seen.push_back(spectral::wrap_angle(w.angles[j]));
        scan.orbits.push_back(o);
    }
    return scan;
}

// beta_m = phi'_m / A'_m through the recursion
// beta_m = 1 - x_m (1 + beta_{m-1}) / (l_{m-1} - x_{m-1} + l_{m-1} beta_{m-1}), beta_0 = 0.
inline double beta(SupportCurve const& c, double theta, int m)
{
    auto const w = wavefront(c, theta, m);
    double b = 0;
    for (int j = 1; j <= m; ++j)
    {
        double const l = w.chords[j - 1];
        double const den = l - w.x_values[j - 1] + l * b;
        if (std::abs(den) < 1e-14 * (1.0 + l))
            throw NumericalError("beta undefined: wavefront critical point at bounce "
                                 + std::to_string(j));
        b = 1.0 - w.x_values[j] * (1.0 + b) / den;
    }
    return b;
}

// min over psi of h(psi) - <P, -N(psi)>: distance to the boundary for
// interior points, negative outside.
inline double interior_margin(SupportCurve const& c, PlanePoint p)
{
    auto f = [&](double psi) { return c.eval(psi).h + dot(p, normal(psi)); };
    std::size_t const m = c.grid_size();
    std::size_t best = 0;
    double bestv = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
    {
        double const t = c.grid_angle(j);
        double const v = c.grid_h()[j] + dot(p, normal(t));
        if (v < bestv)
        {
            bestv = v;
            best = j;
        }
    }
    double const d = two_pi / static_cast<double>(m);
    double const t = c.grid_angle(best);
    std::uintmax_t iters = 100;
    auto const r = boost::math::tools::brent_find_minima(f, t - d, t + d, 40, iters);
    return std::min(bestv, r.second);
}

struct EnvelopePoint
{
    PlanePoint point;
    int m = 0;
    double inside_margin = 0;
    bool singular = false;
};

// Focus of the m-times reflected orthogonal wavefront:
// E_m = X(A_m) + x_m A'_m / (A'_m + phi'_m) v(phi_m). E_0 is the evolute.
inline EnvelopePoint envelope(SupportCurve const& c, double theta, int m)
{
    auto const w = wavefront(c, theta, m);
    EnvelopePoint e;
    e.m = m;
    double const den = w.dA_m() + w.dphi_m();
    if (std::abs(den) < 1e-10 * (1.0 + std::abs(w.dA_m())))
    {
        e.singular = true;
        e.point = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        e.inside_margin = std::numeric_limits<double>::quiet_NaN();
        return e;
    }
    double const a = spectral::wrap_angle(w.A());
    double const dist = w.x_values.back() * w.dA_m() / den;
    e.point = c.position(a) + dist * ray_direction({a, w.phi()});
    e.inside_margin = interior_margin(c, e.point);
    return e;
}

struct Containment
{
    bool contained = false;
    double margin = 0;
    double witness_theta = 0;  // where the margin is smallest
};

inline Containment evolute_containment(SupportCurve const& c)
{
    auto f = [&](double t) { return interior_margin(c, evolute(c, t)); };
    std::size_t const m = c.grid_size();
    std::size_t best = 0;
    double bestv = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
    {
        double const v = f(c.grid_angle(j));
        if (v < bestv)
        {
            bestv = v;
            best = j;
        }
    }
    double const d = two_pi / static_cast<double>(m);
    double const t = c.grid_angle(best);
    std::uintmax_t iters = 100;
    auto const r = boost::math::tools::brent_find_minima(f, t - d, t + d, 40, iters);
    Containment out;
    out.margin = std::min(bestv, r.second);
    out.witness_theta = spectral::wrap_angle(r.second < bestv ? r.first : t);
    out.contained = out.margin > 0;
    return out;
}

struct DiffeoCertificate
{
    bool ok = false;
    double min_abs_dA = 0;
    std::optional<double> witness;  // angle where some A'_m vanishes
    int witness_m = 0;
};

// Certifies that theta -> A_m(theta) is a diffeomorphism for m = 1..j by a
// dense scan of A'_m for sign changes and small values.
inline DiffeoCertificate diffeo_certificate(SupportCurve const& c, int j,
                                            std::size_t scan_points = 2048)
{
    if (j < 1 || j > default_max_bounces)
        throw ConfigError("diffeo_certificate: j out of range");
    std::vector<std::vector<double>> da(static_cast<std::size_t>(j) + 1,
                                        std::vector<double>(scan_points));
    for (std::size_t i = 0; i < scan_points; ++i)
    {
        auto const w = wavefront(c, two_pi * static_cast<double>(i) / scan_points, j);
        for (int m = 1; m <= j; ++m)
            da[m][i] = w.dA[m];
    }
    DiffeoCertificate cert;
    cert.min_abs_dA = std::numeric_limits<double>::infinity();
    double const step = two_pi / static_cast<double>(scan_points);
    for (int m = 1; m <= j; ++m)
    {
        auto dfun = [&](double t) { return wavefront(c, t, m).dA_m(); };
        for (std::size_t i = 0; i < scan_points; ++i)
        {
            double const a = da[m][i];
            double const b = da[m][(i + 1) % scan_points];
            double const t0 = step * static_cast<double>(i);
            if ((a > 0) != (b > 0))
            {
                std::uintmax_t iters = 100;
                auto const r = boost::math::tools::toms748_solve(
                    dfun, t0, t0 + step, a, b, boost::math::tools::eps_tolerance<double>(40),
                    iters);
                cert.min_abs_dA = 0.0;
                if (!cert.witness)
                {
                    cert.witness = spectral::wrap_angle(0.5 * (r.first + r.second));
                    cert.witness_m = m;
                }
                continue;
            }
            cert.min_abs_dA = std::min(cert.min_abs_dA, std::abs(a));
        }
        // Subdivide around the smallest value of this level.
        std::size_t const i = static_cast<std::size_t>(
            std::min_element(da[m].begin(), da[m].end(),
                             [](double x, double y) { return std::abs(x) < std::abs(y); })
            - da[m].begin());
        double const t = step * static_cast<double>(i);
        std::uintmax_t iters = 100;
        auto const r = boost::math::tools::brent_find_minima(
            [&](double s) { return std::abs(dfun(s)); }, t - step, t + step, 40, iters);
        cert.min_abs_dA = std::min(cert.min_abs_dA, r.second);
    }
    cert.ok = !cert.witness && cert.min_abs_dA > 1e-10;
    return cert;
}

// Largest deviations max |l_j - 2| and max |x_j - 1| over j < m (resp. j <= m)
// and the grid angles; both vanish on the unit circle.
struct WavefrontDeviation
{
    double chord = 0;
    double x = 0;
};

inline WavefrontDeviation wavefront_deviation(SupportCurve const& c, int m,
                                              std::size_t scan_points = 256)
{
    WavefrontDeviation d;
    for (std::size_t i = 0; i < scan_points; ++i)
    {
        auto const w = wavefront(c, two_pi * static_cast<double>(i) / scan_points, m);
        for (double l : w.chords)
            d.chord = std::max(d.chord, std::abs(l - 2.0));
        for (double x : w.x_values)
            d.x = std::max(d.x, std::abs(x - 1.0));
    }
    return d;
}

}  // namespace ovalflow
