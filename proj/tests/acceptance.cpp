// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ovalflow/csf_flow.hpp"
#include "ovalflow/ellipse_melnikov.hpp"
#include "ovalflow/normal_orbits.hpp"
#include "ovalflow/periodic_orbits.hpp"

using namespace ovalflow;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

// Collects named checks; the criterion passes when all of them hold.
class Checks
{
  public:
    void below(std::string const& name, double value, double bound)
    {
        add(name, value < bound, fmt(value) + " < " + fmt(bound));
    }
    void above(std::string const& name, double value, double bound)
    {
        add(name, value > bound, fmt(value) + " > " + fmt(bound));
    }
    void within(std::string const& name, double value, double lo, double hi)
    {
        add(name, value >= lo && value <= hi, fmt(value) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
    void holds(std::string const& name, bool ok, std::string const& note = "")
    {
        add(name, ok, note.empty() ? (ok ? "yes" : "no") : note);
    }

    Outcome outcome() const { return {pass_, text_.str()}; }

    static std::string fmt(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

  private:
    void add(std::string const& name, bool ok, std::string const& note)
    {
        pass_ = pass_ && ok;
        if (!first_)
            text_ << "; ";
        first_ = false;
        text_ << name << ' ' << note << (ok ? "" : " [fails]");
    }

    bool pass_ = true;
    bool first_ = true;
    std::ostringstream text_;
};

FlowTrajectory const& ellipse_run()
{
    static FlowTrajectory const traj
        = evolve(FlowState{0.0, make_ellipse(1.25, 0.8, 32)}, 6.0, 1e-3);
    return traj;
}

Outcome flow_fixed_point()
{
    auto const c = make_circle(1.0, 16);
    auto const traj = evolve(FlowState{0.0, c}, 5.0, 1e-3);
    double dev = 0;
    for (std::size_t j = 0; j < c.grid_size(); ++j)
        dev = std::max(dev, std::abs(traj.states.back().curve.eval(c.grid_angle(j)).h - 1.0));
    Checks k;
    k.below("max|h - 1| at t = 5", dev, 1e-10);
    return k.outcome();
}

Outcome normalization()
{
    auto const& traj = ellipse_run();
    double area_err = 0;
    double entropy_rise = -1e300;
    double w_rise = -1e300;
    for (std::size_t i = 0; i < traj.diagnostics.size(); ++i)
    {
        auto const& d = traj.diagnostics[i];
        area_err = std::max(area_err, std::abs(d.area - pi));
        if (i > 0)
        {
            entropy_rise = std::max(entropy_rise, d.entropy - traj.diagnostics[i - 1].entropy);
            w_rise = std::max(w_rise, d.w - traj.diagnostics[i - 1].w);
        }
    }
    Checks k;
    k.below("max|area - pi|", area_err, 1e-10);
    k.below("max entropy increment", entropy_rise, 1e-10);
    k.below("max w increment", w_rise, 1e-10);
    return k.outcome();
}

Outcome decay_rate()
{
    double const base = decay_rates(ellipse_run(), 3.0, 6.0).rate_k;
    auto const half_dt = evolve(FlowState{0.0, make_ellipse(1.25, 0.8, 32)}, 6.0, 5e-4);
    auto const fine = evolve(FlowState{0.0, make_ellipse(1.25, 0.8, 64)}, 6.0, 1e-3);
    double const r_dt = decay_rates(half_dt, 3.0, 6.0).rate_k;
    double const r_n = decay_rates(fine, 3.0, 6.0).rate_k;
    Checks k;
    k.within("slope", base, -2.5, -1.5);
    k.below("|slope change, dt / 2|", std::abs(r_dt - base), 0.1);
    k.below("|slope change, 2N|", std::abs(r_n - base), 0.1);
    return k.outcome();
}

Outcome billiard_identities()
{
    auto const c = make_ellipse(1.25, 0.8);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> th(0, two_pi), ph(0.01, pi - 0.01);
    double rev = 0, gen = 0, det = 0, chord = 0;
    for (int i = 0; i < 1000; ++i)
    {
        PhasePoint const p{th(rng), ph(rng)};
        auto const r = reflect(c, p);
        auto const back = involution(reflect(c, involution(r.to)).to);
        rev = std::max({rev, std::abs(spectral::angle_difference(back.theta, p.theta)),
                        std::abs(back.phi - p.phi)});
        auto const g = generating_length(c, c.arclength(r.from.theta), c.arclength(r.to.theta));
        gen = std::max({gen, std::abs(-g.d_first - std::cos(r.from.phi)),
                        std::abs(g.d_second - std::cos(r.to.phi))});
        det = std::max(det, std::abs(symplectic_jacobian(c, r).det() - 1.0));
        chord = std::max(chord, std::abs(chord_projection_integral(c, r.from.theta, r.to.theta,
                                                                   r.from.phi)
                                         - r.chord));
    }
    Checks k;
    k.below("reversibility", rev, 1e-9);
    k.below("generating partials", gen, 1e-7);
    k.below("|det DB - 1|", det, 1e-9);
    k.below("chord integral / perimeter", chord / c.perimeter(), 1e-8);
    return k.outcome();
}

Outcome diameter_classification()
{
    auto const c = make_ellipse(1.25, 0.8);
    auto const scan = find_diameters(c);
    Checks k;
    k.holds("two diameters", !scan.continuum && scan.orbits.size() == 2,
            std::to_string(scan.orbits.size()) + " found");
    if (scan.orbits.size() != 2)
        return k.outcome();
    auto const& minor = scan.orbits[0];
    auto const& major = scan.orbits[1];
    k.holds("minor elliptic", std::abs(minor.theta) < 1e-9 && minor.klass == OrbitClass::elliptic,
            to_string(minor.klass));
    k.holds("major hyperbolic",
            std::abs(major.theta - pi / 2) < 1e-9 && major.klass == OrbitClass::hyperbolic,
            to_string(major.klass));
    k.below("|f'(major) - 1.476|", std::abs(major.f_prime - 1.476), 1e-6);
    k.below("|f'(minor) + 2.30625|", std::abs(minor.f_prime + 2.30625), 1e-6);
    double const tr_minor = stability_trace(c, minor.theta);
    double const tr_major = stability_trace(c, major.theta);
    k.holds("trace agrees", std::abs(tr_minor) < 2 && std::abs(tr_major) > 2,
            "|tr| " + Checks::fmt(tr_minor) + ", " + Checks::fmt(tr_major));
    return k.outcome();
}

Outcome constant_width_breaking()
{
    FlowSettings fs;
    fs.snapshot_stride = 1e-3;
    auto const traj = evolve(FlowState{0.0, make_constant_width(2.0, {{3, 0.05, 0.0}}, 48)}, 0.5,
                             1e-3, fs);
    auto max_f = [&](std::size_t i) {
        auto const& c = traj.states[i].curve;
        double m = 0;
        for (std::size_t j = 0; j < c.grid_size(); ++j)
            m = std::max(m, std::abs(pair_function(c, c.grid_angle(j))));
        return m;
    };
    std::size_t const i01 = 100;
    Checks k;
    k.below("max|f| at t = 0", max_f(0), 1e-9);
    k.above("max|f| at t = 0.1", max_f(i01), 1e-4);
    double mismatch = 0;
    for (std::size_t i : {i01, traj.states.size() - 1})
    {
        double const t = traj.states[i].t;
        for (int j = 0; j < 64; ++j)
        {
            double const theta = pi * j / 64.0;
            mismatch = std::max(mismatch, std::abs(pair_function(traj.states[i].curve, theta)
                                                   - integrated_f(traj, theta, 0.0, t)));
        }
    }
    k.below("max|f - integrated f|", mismatch, 1e-4);
    return k.outcome();
}

Outcome np_destruction()
{
    auto const c0 = make_ellipse(2.0, 0.5, 64);
    Checks k;
    auto const cert1 = diffeo_certificate(c0, 1);
    k.holds("certificate(1) fails at t = 0", !cert1.ok && cert1.witness.has_value(),
            cert1.witness ? "witness theta " + Checks::fmt(*cert1.witness) : "no witness");
    FlowSettings fs;
    fs.snapshot_stride = 0.25;
    auto const traj = evolve(FlowState{0.0, c0}, 8.0, 1e-3, fs);
    double found = -1;
    std::size_t np_count = 0;
    for (auto const& s : traj.states)
    {
        if (!evolute_containment(s.curve).contained || !diffeo_certificate(s.curve, 2).ok)
            continue;
        np_count = np_detect(s.curve, 2).irreducible_count();
        if (np_count == 0)
        {
            found = s.t;
            break;
        }
    }
    k.holds("contained, certificate(2), NP(4) empty", found >= 0,
            found >= 0 ? "from t = " + Checks::fmt(found) : "not reached by t = 8");
    return k.outcome();
}

Outcome envelope_asymptotics()
{
    auto const& traj = ellipse_run();
    double prev_l = 1e300, prev_x = 1e300, worst_l = 0, worst_x = 0, min_margin = 1e300;
    bool monotone = true;
    bool regular = true;
    for (auto const& s : traj.states)
    {
        if (s.t < 5.0 - 1e-9)
            continue;
        auto const d = wavefront_deviation(s.curve, 8);
        monotone = monotone && d.chord <= prev_l && d.x <= prev_x;
        prev_l = d.chord;
        prev_x = d.x;
        worst_l = std::max(worst_l, d.chord);
        worst_x = std::max(worst_x, d.x);
        for (int m = 1; m <= 8; ++m)
            for (int j = 0; j < 128; ++j)
            {
                auto const e = envelope(s.curve, two_pi * j / 128.0, m);
                regular = regular && !e.singular;
                if (!e.singular)
                    min_margin = std::min(min_margin, e.inside_margin);
            }
    }
    Checks k;
    k.below("max|l_m - 2|", worst_l, 0.05);
    k.below("max|x_m - 1|", worst_x, 0.05);
    k.holds("non-increasing", monotone);
    k.holds("E_m regular", regular);
    k.above("min interior margin", min_margin, 0.0);
    return k.outcome();
}

Outcome melnikov_nonconstancy()
{
    auto const e = make_ellipse_params(1.25, 0.8);
    auto const range = rotation_range(e);
    Checks k;
    for (auto [p, q] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{3, 4}})
    {
        std::string const tag = "(" + std::to_string(p) + "," + std::to_string(2 * q) + ")";
        auto const r = resonance_solve(e, p, q);
        if (!r)
        {
            double const rot = p / (2.0 * q);
            k.holds(tag, rot <= range.low || rot >= range.high,
                    "not admissible, rotation " + Checks::fmt(rot) + " outside ("
                        + Checks::fmt(range.low) + ", " + Checks::fmt(range.high) + ")");
            continue;
        }
        auto const curve = melnikov_curve(e, *r, 256);
        k.holds(tag + " destroyed", curve.destroyed,
                "amplitude " + Checks::fmt(curve.amplitude) + " vs floor "
                    + Checks::fmt(curve.noise_floor));
        double c1 = 0, c2 = 0;
        for (int i = 0; i < 16; ++i)
        {
            auto const orbit = caustic_orbit(*r, r->delta * i / 16.0);
            c1 = std::max(c1, chord_identity_residual(e, *r, orbit));
            c2 = std::max(c2, length_variation_check(e, *r, orbit).residual());
        }
        k.below(tag + " chord identity", c1, 1e-6);
        k.below(tag + " length variation", c2, 1e-7);
    }
    return k.outcome();
}

Outcome oracle_equivalence()
{
    auto const c = make_ellipse(1.25, 0.8);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> th(0, two_pi);
    double const h = 1e-6;
    double worst = 0;
    for (int i = 0; i < 100; ++i)
    {
        double const t = th(rng);
        auto const w = wavefront(c, t, 8);
        auto const p = wavefront(c, t + h, 8);
        auto const q = wavefront(c, t - h, 8);
        for (int m = 1; m <= 8; ++m)
        {
            double const fa = (p.angles[m] - q.angles[m]) / (2 * h);
            double const fp = (p.phis[m] - q.phis[m]) / (2 * h);
            double const scale = std::max(std::abs(w.dA[m]), std::abs(w.dphi[m]));
            worst = std::max({worst, std::abs(w.dA[m] - fa) / scale,
                              std::abs(w.dphi[m] - fp) / scale});
        }
    }
    Checks k;
    k.below("max relative difference", worst, 1e-5);
    return k.outcome();
}

}  // namespace

int main()
{
    std::vector<std::pair<char const*, std::function<Outcome()>>> const criteria{
        {"flow fixed point", flow_fixed_point},
        {"normalization and monotonicity", normalization},
        {"decay rate", decay_rate},
        {"billiard identities", billiard_identities},
        {"diameter classification", diameter_classification},
        {"constant width breaking", constant_width_breaking},
        {"NP(4) destruction", np_destruction},
        {"envelope asymptotics", envelope_asymptotics},
        {"Melnikov non-constancy", melnikov_nonconstancy},
        {"wavefront oracle equivalence", oracle_equivalence},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        auto const start = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = criteria[i].second();
        }
        catch (std::exception const& e)
        {
            out = {false, std::string("exception: ") + e.what()};
        }
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += out.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, out.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
