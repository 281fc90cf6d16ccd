#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "errors.hpp"
#include "spectral.hpp"

namespace ovalflow {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct PlanePoint
{
    double x = 0;
    double y = 0;
};

inline PlanePoint operator+(PlanePoint a, PlanePoint b) { return {a.x + b.x, a.y + b.y}; }
inline PlanePoint operator-(PlanePoint a, PlanePoint b) { return {a.x - b.x, a.y - b.y}; }
inline PlanePoint operator-(PlanePoint a) { return {-a.x, -a.y}; }
inline PlanePoint operator*(double s, PlanePoint a) { return {s * a.x, s * a.y}; }
inline double dot(PlanePoint a, PlanePoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(PlanePoint a, PlanePoint b) { return a.x * b.y - a.y * b.x; }
inline double norm(PlanePoint a) { return std::hypot(a.x, a.y); }

// Unit tangent T(theta) = (cos, sin) and inward normal N = T' = (-sin, cos).
inline PlanePoint tangent(double theta) { return {std::cos(theta), std::sin(theta)}; }
inline PlanePoint normal(double theta) { return {-std::sin(theta), std::cos(theta)}; }

struct SupportEval
{
    double h = 0;
    double dh = 0;
    double d2h = 0;
    double radius = 0;         // R = h + h''
    double radius_prime = 0;   // R' = h' + h'''
};

struct Harmonic
{
    int frequency = 0;
    double cos_amp = 0;
    double sin_amp = 0;
};

// Strictly convex oval given by the harmonic series of its support function
// h(theta), theta the tangent angle. The trace is X = h' T - h N.
class SupportCurve
{
  public:
    SupportCurve(spectral::Series h, std::size_t grid_size) : h_(std::move(h)), grid_(grid_size)
    {
        std::size_t const nh = h_.harmonics();
        if (nh == 0)
            throw ConfigError("support curve needs at least one harmonic");
        if (h_.s.size() != h_.c.size())
            throw ConfigError("support curve: coefficient arrays differ in length");
        if (!spectral::is_power_of_two(grid_) || grid_ < 4 * nh)
            throw ConfigError("grid_size must be a power of two >= 4 * harmonic_count");
        for (std::size_t n = 0; n <= nh; ++n)
        {
            if (!std::isfinite(h_.c[n]) || !std::isfinite(h_.s[n]))
                throw ConfigError("support curve: non-finite coefficient");
        }
        h_.s[0] = 0.0;
        h_grid_ = spectral::synthesize(h_, grid_);
        r_series_ = h_;
        for (std::size_t n = 0; n <= nh; ++n)
        {
            double const f = 1.0 - static_cast<double>(n * n);
            r_series_.c[n] *= f;
            r_series_.s[n] *= f;
        }
        r_grid_ = spectral::synthesize(r_series_, grid_);
        for (std::size_t j = 0; j < grid_; ++j)
        {
            if (!(h_grid_[j] > 0.0))
                throw ConvexityError("support function not positive at node "
                                     + std::to_string(j) + " (origin outside curve)");
            if (!(r_grid_[j] > 0.0))
                throw ConvexityError("radius of curvature not positive at node "
                                     + std::to_string(j));
        }
        // Antiderivative of R minus its mean, used for arclength.
        arc_series_ = spectral::Series(nh);
        for (std::size_t n = 1; n <= nh; ++n)
        {
            double const fn = static_cast<double>(n);
            arc_series_.c[n] = -r_series_.s[n] / fn;
            arc_series_.s[n] = r_series_.c[n] / fn;
        }
        arc_offset_ = spectral::evaluate(arc_series_, 0.0).v0;
    }

    std::size_t harmonic_count() const { return h_.harmonics(); }
    std::size_t grid_size() const { return grid_; }
    spectral::Series const& series() const { return h_; }
    spectral::Series const& radius_series() const { return r_series_; }

    std::vector<double> const& grid_h() const { return h_grid_; }
    std::vector<double> const& grid_radius() const { return r_grid_; }
    double grid_angle(std::size_t j) const { return spectral::grid_angle(j, grid_); }

    SupportEval eval(double theta) const
    {
        auto const v = spectral::evaluate(h_, theta);
        SupportEval e;
        e.h = v.v0;
        e.dh = v.v1;
        e.d2h = v.v2;
        e.radius = v.v0 + v.v2;
        e.radius_prime = v.v1 + v.v3;
        return e;
    }

    double radius(double theta) const { return spectral::evaluate(r_series_, theta).v0; }

    PlanePoint position(double theta) const
    {
        auto const v = spectral::evaluate(h_, theta);
        double const c = std::cos(theta);
        double const s = std::sin(theta);
        return {v.v1 * c + v.v0 * s, v.v1 * s - v.v0 * c};
    }

    double min_radius() const { return *std::min_element(r_grid_.begin(), r_grid_.end()); }
    double max_radius() const { return *std::max_element(r_grid_.begin(), r_grid_.end()); }

    // 1/2 int h R dtheta; the trapezoid rule is exact for this product.
    double area() const
    {
        double sum = 0;
        for (std::size_t j = 0; j < grid_; ++j)
            sum += h_grid_[j] * r_grid_[j];
        return pi * sum / static_cast<double>(grid_);
    }

    double perimeter() const { return two_pi * h_.c[0]; }

    // Average of log k = -log R over the tangent angle.
    double entropy() const
    {
        double sum = 0;
        for (double r : r_grid_)
            sum -= std::log(r);
        return sum / static_cast<double>(grid_);
    }

    // int_0^{2 pi} log h dtheta.
    double log_support_integral() const
    {
        double sum = 0;
        for (double h : h_grid_)
            sum += std::log(h);
        return two_pi * sum / static_cast<double>(grid_);
    }

    // Arclength from theta = 0 to theta (any real theta; monotone).
    double arclength(double theta) const
    {
        return h_.c[0] * theta + spectral::evaluate(arc_series_, theta).v0 - arc_offset_;
    }

    // Inverse of arclength(); safeguarded Newton iteration.
    double angle_at_arclength(double s) const
    {
        double const r0 = h_.c[0];
        double bound = 0;
        for (std::size_t n = 1; n < arc_series_.c.size(); ++n)
            bound += std::abs(arc_series_.c[n]) + std::abs(arc_series_.s[n]);
        bound = 2.0 * bound + 1e-12 * (1.0 + std::abs(s));
        double lo = (s - bound) / r0;
        double hi = (s + bound) / r0;
        auto f = [&](double t) {
            return std::make_pair(arclength(t) - s, radius(t));
        };
        std::uintmax_t iters = 100;
        return boost::math::tools::newton_raphson_iterate(f, s / r0, lo, hi, 50, iters);
    }

  private:
    spectral::Series h_;
    std::size_t grid_;
    std::vector<double> h_grid_;
    std::vector<double> r_grid_;
    spectral::Series r_series_;
    spectral::Series arc_series_;
    double arc_offset_ = 0;
};

namespace detail {

inline std::size_t default_grid(std::size_t harmonics)
{
    std::size_t m = 8;
    while (m < 4 * harmonics)
        m *= 2;
    return m;
}

}  // namespace detail

inline SupportCurve make_circle(double radius, std::size_t harmonics = 16)
{
    if (!(radius > 0) || !std::isfinite(radius))
        throw ConfigError("circle radius must be positive");
    spectral::Series h(harmonics);
    h.c[0] = radius;
    return SupportCurve(std::move(h), detail::default_grid(harmonics));
}

// Ellipse x^2/a^2 + y^2/b^2 = 1. In normal-angle form the support function is
// sqrt(a^2 cos^2 psi + b^2 sin^2 psi) with outward normal (cos psi, sin psi).
// The outward normal at tangent angle theta is -N(theta) = (sin theta, -cos theta),
// so psi = theta - pi/2 and h(theta) = sqrt(a^2 sin^2 theta + b^2 cos^2 theta).
inline double ellipse_support(double a, double b, double theta)
{
    double const s = std::sin(theta);
    double const c = std::cos(theta);
    return std::sqrt(a * a * s * s + b * b * c * c);
}

inline SupportCurve make_ellipse(double a, double b, std::size_t harmonics = 64,
                                 std::size_t grid_size = 0)
{
    if (!(b > 0) || !(a >= b) || !std::isfinite(a))
        throw ConfigError("ellipse requires a >= b > 0");
    if (grid_size == 0)
        grid_size = detail::default_grid(harmonics);
    if (a == b)
    {
        spectral::Series h(harmonics);
        h.c[0] = a;
        return SupportCurve(std::move(h), grid_size);
    }
    std::size_t const fine = 4 * std::max<std::size_t>(grid_size, 256);
    std::vector<double> samples(fine);
    for (std::size_t j = 0; j < fine; ++j)
        samples[j] = ellipse_support(a, b, spectral::grid_angle(j, fine));
    auto h = spectral::analyze(samples, harmonics);
    // Symmetry about both axes: only even cosine harmonics survive.
    for (std::size_t n = 0; n <= harmonics; ++n)
    {
        h.s[n] = 0.0;
        if (n % 2 == 1)
            h.c[n] = 0.0;
    }
    return SupportCurve(std::move(h), grid_size);
}

// h = d/2 + sum of odd harmonics; h(theta) + h(theta + pi) = d.
inline SupportCurve make_constant_width(double d, std::vector<Harmonic> const& odd,
                                        std::size_t harmonics = 0)
{
    if (!(d > 0) || !std::isfinite(d))
        throw ConfigError("constant width must be positive");
    int top = 1;
    for (auto const& hm : odd)
    {
        if (hm.frequency < 3 || hm.frequency % 2 == 0)
            throw ConfigError("constant-width harmonics must be odd and >= 3, got "
                              + std::to_string(hm.frequency));
        top = std::max(top, hm.frequency);
    }
    if (harmonics == 0)
        harmonics = std::max<std::size_t>(16, static_cast<std::size_t>(top));
    if (harmonics < static_cast<std::size_t>(top))
        throw ConfigError("harmonic_count below highest requested frequency");
    spectral::Series h(harmonics);
    h.c[0] = 0.5 * d;
    for (auto const& hm : odd)
    {
        h.c[hm.frequency] += hm.cos_amp;
        h.s[hm.frequency] += hm.sin_amp;
    }
    return SupportCurve(std::move(h), detail::default_grid(harmonics));
}

inline SupportEval eval(SupportCurve const& c, double theta) { return c.eval(theta); }

inline PlanePoint position(SupportCurve const& c, double theta) { return c.position(theta); }

// E = X + R N = h' T + (R - h) N.
inline PlanePoint evolute(SupportCurve const& c, double theta)
{
    auto const e = c.eval(theta);
    return e.dh * tangent(theta) + (e.radius - e.h) * normal(theta);
}

inline double width(SupportCurve const& c, double theta)
{
    return c.eval(theta).h + c.eval(theta + pi).h;
}

inline double area(SupportCurve const& c) { return c.area(); }
inline double entropy(SupportCurve const& c) { return c.entropy(); }

// int_{theta0}^{theta1} cos(theta - theta0 - phi) R(theta) dtheta, with theta1
// taken in (theta0, theta0 + 2 pi). Composite 20-point Gauss panels.
inline double chord_projection_integral(SupportCurve const& c, double theta0, double theta1,
                                        double phi)
{
    double const span = spectral::wrap_angle(theta1 - theta0);
    double const end = theta0 + span;
    std::size_t const panels = std::max<std::size_t>(4, c.harmonic_count() / 2 + 1);
    double const w = span / static_cast<double>(panels);
    auto f = [&](double t) { return std::cos(t - theta0 - phi) * c.radius(t); };
    double sum = 0;
    for (std::size_t k = 0; k < panels; ++k)
    {
        double const lo = theta0 + w * static_cast<double>(k);
        double const hi = (k + 1 == panels) ? end : lo + w;
        sum += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, hi);
    }
    return sum;
}

// Chord length as the integral above; throws when the triple is inconsistent
// with the Euclidean distance.
inline double chord_length_integral(SupportCurve const& c, double theta0, double theta1,
                                    double phi)
{
    double const integral = chord_projection_integral(c, theta0, theta1, phi);
    double const direct = norm(c.position(theta1) - c.position(theta0));
    if (std::abs(integral - direct) > 1e-6 * c.perimeter())
        throw NumericalError("chord integral disagrees with Euclidean chord: "
                             + std::to_string(integral) + " vs " + std::to_string(direct));
    return integral;
}

// C0 = 2 (2/pi) int_0^pi log|cos u| du, by quadrature (analytically -4 log 2).
inline double chord_bound_constant()
{
    static double const value = [] {
        boost::math::quadrature::tanh_sinh<double> integrator;
        double const half
            = integrator.integrate([](double u) { return std::log(std::cos(u)); }, 0.0, pi / 2);
        return 2.0 * (2.0 / pi) * (2.0 * half);
    }();
    return value;
}

// exp(C0 / 2 - E / pi); a diagnostic lower bound for chords that are not
// close to grazing.
inline double chord_lower_bound(SupportCurve const& c)
{
    return std::exp(0.5 * chord_bound_constant() - c.entropy() / pi);
}

struct TraceSample
{
    double theta, x, y, h, radius;
};

inline std::vector<TraceSample> sample_trace(SupportCurve const& c)
{
    std::vector<TraceSample> out;
    out.reserve(c.grid_size());
    for (std::size_t j = 0; j < c.grid_size(); ++j)
    {
        double const t = c.grid_angle(j);
        auto const p = c.position(t);
        out.push_back({t, p.x, p.y, c.grid_h()[j], c.grid_radius()[j]});
    }
    return out;
}

}  // namespace ovalflow
