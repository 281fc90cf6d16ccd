#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "oval_geometry.hpp"
#include "spectral.hpp"

namespace ovalflow {

struct FlowSettings
{
    double stability_factor = 0.5;  // dt_stable = c (min R)^2 / N^2
    bool recenter = true;           // project out harmonic 1 (translations)
    double snapshot_stride = 0.05;
};

struct FlowState
{
    double t = 0;
    SupportCurve curve;
};

struct FlowDiagnostics
{
    double t = 0;
    double area = 0;
    double entropy = 0;
    double w = 0;           // int log h dtheta
    double knorm = 0;       // max |k - 1|
    double kprimenorm = 0;  // max |k'|
};

struct FlowTrajectory
{
    std::vector<FlowState> states;
    std::vector<FlowDiagnostics> diagnostics;
    double step_size = 0;
    FlowSettings settings;
};

namespace detail {

// Closed-form area pi c0^2 + pi/2 sum (1 - n^2)(c_n^2 + s_n^2).
inline double series_area(spectral::Series const& h)
{
    double a = pi * h.c[0] * h.c[0];
    for (std::size_t n = 1; n < h.c.size(); ++n)
    {
        double const f = 1.0 - static_cast<double>(n * n);
        a += 0.5 * pi * f * (h.c[n] * h.c[n] + h.s[n] * h.s[n]);
    }
    return a;
}

// h - 1/R, with 1/R evaluated on a 2x padded grid and truncated back.
inline spectral::Series flow_field(spectral::Series const& h, std::size_t grid)
{
    std::size_t const nh = h.harmonics();
    spectral::Series r = h;
    for (std::size_t n = 0; n <= nh; ++n)
    {
        double const f = 1.0 - static_cast<double>(n * n);
        r.c[n] *= f;
        r.s[n] *= f;
    }
    std::size_t const padded = 2 * grid;
    auto values = spectral::synthesize(r, padded);
    for (std::size_t j = 0; j < padded; ++j)
    {
        if (!(values[j] > 0.0))
            throw ConvexityError("radius of curvature lost positivity during flow");
        values[j] = 1.0 / values[j];
    }
    auto k = spectral::analyze(values, nh);
    return h + (-1.0) * k;
}

}  // namespace detail

// Spectral coefficients of h_t = h - k.
inline spectral::Series time_derivative(SupportCurve const& c)
{
    return detail::flow_field(c.series(), c.grid_size());
}

inline double stable_step(SupportCurve const& c, FlowSettings const& settings = {})
{
    double const n = static_cast<double>(c.harmonic_count());
    double const rmin = c.min_radius();
    return settings.stability_factor * rmin * rmin / (n * n);
}

inline FlowDiagnostics diagnose(SupportCurve const& c, double t = 0)
{
    FlowDiagnostics d;
    d.t = t;
    d.area = c.area();
    d.entropy = c.entropy();
    d.w = c.log_support_integral();
    auto const rp = spectral::synthesize(spectral::derivative(c.radius_series(), 1), c.grid_size());
    auto const& r = c.grid_radius();
    for (std::size_t j = 0; j < r.size(); ++j)
    {
        d.knorm = std::max(d.knorm, std::abs(1.0 / r[j] - 1.0));
        d.kprimenorm = std::max(d.kprimenorm, std::abs(rp[j] / (r[j] * r[j])));
    }
    return d;
}

// Uniform scaling to area pi, optionally removing the translation mode.
inline SupportCurve normalize_curve(SupportCurve const& c, bool recenter)
{
    spectral::Series h = c.series();
    if (recenter && h.harmonics() >= 1)
    {
        h.c[1] = 0.0;
        h.s[1] = 0.0;
    }
    double const a = detail::series_area(h);
    if (!(a > 0))
        throw NumericalError("non-positive area");
    double const f = std::sqrt(pi / a);
    return SupportCurve(f * h, c.grid_size());
}

// Advance by dt with RK4. dt is split into equal substeps no larger than
// stable_step(); each substep is followed by the area projection.
inline FlowState step(FlowState const& state, double dt, FlowSettings const& settings = {})
{
    if (!(dt > 0) || !std::isfinite(dt))
        throw ConfigError("time step must be positive");
    double const bound = stable_step(state.curve, settings);
    auto const subs = static_cast<std::size_t>(std::max(1.0, std::ceil(dt / bound - 1e-9)));
    double const h = dt / static_cast<double>(subs);
    std::size_t const grid = state.curve.grid_size();
    spectral::Series y = state.curve.series();
    for (std::size_t s = 0; s < subs; ++s)
    {
        auto const k1 = detail::flow_field(y, grid);
        auto const k2 = detail::flow_field(y + (0.5 * h) * k1, grid);
        auto const k3 = detail::flow_field(y + (0.5 * h) * k2, grid);
        auto const k4 = detail::flow_field(y + h * k3, grid);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (settings.recenter)
        {
            y.c[1] = 0.0;
            y.s[1] = 0.0;
        }
        double const a = detail::series_area(y);
        double const f = (a > 0) ? std::sqrt(pi / a) : 0.0;
        if (!(f >= 0.5 && f <= 2.0))
            throw NumericalError("area projection factor out of range");
        y = f * y;
    }
    return FlowState{state.t + dt, SupportCurve(std::move(y), grid)};
}

// Trajectory from state to t_target. The initial curve is first rescaled to
// area pi. Snapshots are taken every settings.snapshot_stride and at the end.
inline FlowTrajectory evolve(FlowState const& initial, double t_target, double dt,
                             FlowSettings const& settings = {})
{
    double const span = t_target - initial.t;
    if (!(span > 0))
        throw ConfigError("t_target must exceed the initial time");
    if (!(dt > 0))
        throw ConfigError("time step must be positive");
    if (!(settings.snapshot_stride > 0))
        throw ConfigError("snapshot stride must be positive");
    auto const steps = static_cast<long long>(std::max(1.0, std::round(span / dt)));
    double const h = span / static_cast<double>(steps);
    auto const stride
        = std::max<long long>(1, std::llround(settings.snapshot_stride / h));

    FlowTrajectory traj;
    traj.step_size = h;
    traj.settings = settings;
    FlowState cur{initial.t, normalize_curve(initial.curve, settings.recenter)};
    traj.states.push_back(cur);
    traj.diagnostics.push_back(diagnose(cur.curve, cur.t));
    for (long long i = 1; i <= steps; ++i)
    {
        try
        {
            cur = step(cur, h, settings);
        }
        catch (Error const& e)
        {
            throw FlowError(e.what(), cur.t);
        }
        cur.t = initial.t + h * static_cast<double>(i);
        if (i % stride == 0 || i == steps)
        {
            traj.states.push_back(cur);
            traj.diagnostics.push_back(diagnose(cur.curve, cur.t));
        }
    }
    return traj;
}

struct DecayRates
{
    double rate_k = 0;
    double rate_kprime = 0;
    std::size_t samples_k = 0;
    std::size_t samples_kprime = 0;
};

namespace detail {

inline double fit_slope(std::vector<double> const& x, std::vector<double> const& y)
{
    double const n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

// Least-squares slopes of log max|k-1| and log max|k'| against t over the
// states in [t_from, t_to] with max|k-1| < 0.2. Norms below the round-off
// floor are left out of the fit.
inline DecayRates decay_rates(FlowTrajectory const& traj,
                              double t_from = -std::numeric_limits<double>::infinity(),
                              double t_to = std::numeric_limits<double>::infinity(),
                              double floor = 1e-12)
{
    std::vector<double> tk, yk, tp, yp;
    for (auto const& d : traj.diagnostics)
    {
        if (d.t < t_from - 1e-12 || d.t > t_to + 1e-12 || !(d.knorm < 0.2))
            continue;
        if (d.knorm > floor)
        {
            tk.push_back(d.t);
            yk.push_back(std::log(d.knorm));
        }
        if (d.kprimenorm > floor)
        {
            tp.push_back(d.t);
            yp.push_back(std::log(d.kprimenorm));
        }
    }
    if (tk.size() < 10 || tp.size() < 10)
        throw NumericalError("too few asymptotic states to fit decay rates");
    return {detail::fit_slope(tk, yk), detail::fit_slope(tp, yp), tk.size(), tp.size()};
}

}  // namespace ovalflow
