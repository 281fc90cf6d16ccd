// ovalflow command-line front end.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ovalflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ovalflow;

namespace {

// Relative output paths land under $OVALFLOW_OUT when it is set.
fs::path output_path(std::string const& p)
{
    fs::path path(p);
    if (char const* root = std::getenv("OVALFLOW_OUT"); root && *root && path.is_relative())
        return fs::path(root) / path;
    return path;
}

void write_table(io::CsvTable const& t, std::string const& out)
{
    t.write(output_path(out));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Curve-shortening flow and billiard dynamics of convex ovals"};
    app.require_subcommand(1);

    // evolve
    std::string ev_input, ev_out;
    double ev_t_end = 0, ev_dt = 1e-3, ev_stride = 0.05;
    std::size_t ev_harmonics = 32;
    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve a curve under the normalized flow");
    evolve_cmd->add_option("--input", ev_input, "Curve JSON or expression such as ellipse(1.25,0.8)")->required();
    evolve_cmd->add_option("--t-end", ev_t_end, "Final flow time")->required();
    evolve_cmd->add_option("--dt", ev_dt, "Time step")->capture_default_str();
    evolve_cmd->add_option("--stride", ev_stride, "Snapshot spacing in flow time")->capture_default_str();
    evolve_cmd->add_option("--harmonics", ev_harmonics, "Harmonics for curve expressions")->capture_default_str();
    evolve_cmd->add_option("--out", ev_out, "Trajectory directory")->required();

    // orbit
    std::string or_curve, or_out;
    double or_theta = 0, or_phi = 0;
    std::size_t or_steps = 100;
    auto* orbit_cmd = app.add_subcommand("orbit", "Iterate the billiard map");
    orbit_cmd->add_option("--curve", or_curve, "Curve JSON or expression")->required();
    orbit_cmd->add_option("--theta", or_theta, "Initial tangent angle")->required();
    orbit_cmd->add_option("--phi", or_phi, "Initial angle with the tangent, in (0, pi)")->required();
    orbit_cmd->add_option("--steps", or_steps, "Number of bounces")->capture_default_str();
    orbit_cmd->add_option("--out", or_out, "CSV output (step,theta,phi,chord)")->required();

    // portrait
    std::string pt_curve, pt_out;
    std::size_t pt_samples = 40, pt_iters = 2000;
    std::uint64_t pt_seed = 1;
    auto* portrait_cmd = app.add_subcommand("portrait", "Phase portrait of the billiard map as SVG");
    portrait_cmd->add_option("--curve", pt_curve, "Curve JSON or expression")->required();
    portrait_cmd->add_option("--samples", pt_samples, "Number of orbits")->capture_default_str();
    portrait_cmd->add_option("--iters", pt_iters, "Bounces per orbit")->capture_default_str();
    portrait_cmd->add_option("--seed", pt_seed, "Seed for starting points")->capture_default_str();
    portrait_cmd->add_option("--out", pt_out, "SVG output")->required();

    // diameters
    std::string di_traj, di_out;
    double di_jump = 0.25;
    auto* diam_cmd = app.add_subcommand("diameters", "Follow period-two orbits along a trajectory");
    diam_cmd->add_option("--traj", di_traj, "Trajectory directory")->required();
    diam_cmd->add_option("--max-jump", di_jump, "Largest accepted angle change per snapshot")->capture_default_str();
    diam_cmd->add_option("--out", di_out, "CSV output (t,theta,length,class,f_prime)")->required();

    // np
    std::string np_traj, np_out;
    int np_nmax = 6;
    double np_stride = 0.5;
    auto* np_cmd = app.add_subcommand("np", "Normal periodic orbits along a trajectory");
    np_cmd->add_option("--traj", np_traj, "Trajectory directory")->required();
    np_cmd->add_option("--n-max", np_nmax, "Largest bounce count n")->capture_default_str();
    np_cmd->add_option("--stride", np_stride, "Flow time between analysed snapshots")->capture_default_str();
    np_cmd->add_option("--out", np_out, "CSV output (t,n,count,min_abs_dA,evolute_margin)")->required();

    // envelope
    std::string en_curve, en_out;
    int en_m = 1;
    std::size_t en_points = 512;
    auto* env_cmd = app.add_subcommand("envelope", "Focusing envelope of the normal wavefront");
    env_cmd->add_option("--curve", en_curve, "Curve JSON or expression")->required();
    env_cmd->add_option("--m", en_m, "Number of bounces (0 gives the evolute)")->capture_default_str();
    env_cmd->add_option("--points", en_points, "Samples in theta")->capture_default_str();
    env_cmd->add_option("--out", en_out, "CSV output (theta,Ex,Ey,margin,singular)")->required();

    // melnikov
    double me_a = 0, me_b = 0;
    int me_p = 1, me_q = 2;
    std::size_t me_samples = 256;
    std::string me_out, me_verdict;
    auto* mel_cmd = app.add_subcommand("melnikov", "Melnikov potential of a resonant hyperbolic caustic");
    mel_cmd->add_option("--a", me_a, "Major semi-axis")->required();
    mel_cmd->add_option("--b", me_b, "Minor semi-axis")->required();
    mel_cmd->add_option("--p", me_p, "Resonance numerator")->capture_default_str();
    mel_cmd->add_option("--q", me_q, "Half period (orbit type (p, 2q))")->capture_default_str();
    mel_cmd->add_option("--samples", me_samples, "Samples over one period")->capture_default_str();
    mel_cmd->add_option("--out", me_out, "CSV output (t,W1)")->required();
    mel_cmd->add_option("--verdict", me_verdict, "JSON verdict path (default: next to the CSV)");

    // run
    std::string ru_config, ru_out;
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a JSON config");
    run_cmd->add_option("--config", ru_config, "Config file")->required();
    run_cmd->add_option("--out", ru_out, "Output directory (overrides the config)");

    // figures
    std::string fi_run;
    std::uint64_t fi_seed = 1;
    auto* fig_cmd = app.add_subcommand("figures", "SVG figures for a finished run");
    fig_cmd->add_option("--run", fi_run, "Run directory")->required();
    fig_cmd->add_option("--seed", fi_seed, "Seed for phase-portrait starting points")->capture_default_str();

    // trace
    std::string tr_curve, tr_out;
    std::size_t tr_harmonics = 32;
    auto* trace_cmd = app.add_subcommand("trace", "Export a curve sampled on its grid");
    trace_cmd->add_option("--curve", tr_curve, "Curve JSON or expression")->required();
    trace_cmd->add_option("--harmonics", tr_harmonics, "Harmonics for curve expressions")->capture_default_str();
    trace_cmd->add_option("--out", tr_out, "CSV output (theta,x,y,h,R); a .json name saves the curve")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::ParseError const& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (*evolve_cmd)
        {
            FlowSettings settings;
            settings.snapshot_stride = ev_stride;
            auto const traj = evolve(FlowState{0.0, curve_from_argument(ev_input, ev_harmonics)},
                                     ev_t_end, ev_dt, settings);
            io::save_trajectory(output_path(ev_out), traj);
            std::cout << "wrote " << traj.states.size() << " snapshots to " << output_path(ev_out).string()
                      << "\n";
        }
        else if (*orbit_cmd)
        {
            auto const c = curve_from_argument(or_curve);
            io::CsvTable t({"step", "theta", "phi", "chord"});
            if (!(or_phi > grazing_guard && or_phi < pi - grazing_guard))
                throw ConfigError("--phi must lie strictly inside (0, pi)");
            PhasePoint p{spectral::wrap_angle(or_theta), or_phi};
            t.add_row({"0", io::format_double(p.theta), io::format_double(p.phi), "0"});
            for (std::size_t i = 1; i <= or_steps; ++i)
            {
                auto const rec = reflect(c, p);
                p = rec.to;
                t.add_row({std::to_string(i), io::format_double(p.theta), io::format_double(p.phi),
                           io::format_double(rec.chord)});
            }
            write_table(t, or_out);
        }
        else if (*portrait_cmd)
        {
            portrait_figure(curve_from_argument(pt_curve), pt_samples, pt_iters, pt_seed)
                .write(output_path(pt_out));
        }
        else if (*diam_cmd)
        {
            auto const traj = io::load_trajectory(di_traj);
            RunConfig cfg;
            cfg.max_jump = di_jump;
            bool continuum = false;
            auto const branches = trace_diameters(traj, cfg, continuum);
            if (continuum)
                std::cout << "diameters form a continuum at t = " << traj.states.front().t << "\n";
            write_table(branch_table(branches), di_out);
        }
        else if (*np_cmd)
        {
            auto const traj = io::load_trajectory(np_traj);
            RunConfig cfg;
            cfg.np.n_max = np_nmax;
            if (np_nmax < 1)
                throw ConfigError("--n-max must be >= 1");
            std::vector<NpRow> rows;
            double next = 0.0;
            for (std::size_t i = 0; i < traj.states.size(); ++i)
            {
                auto const& s = traj.states[i];
                if (s.t + 1e-9 < next && i + 1 != traj.states.size())
                    continue;
                next = s.t + np_stride;
                auto r = np_rows(s.curve, s.t, cfg);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            write_table(np_table(rows), np_out);
        }
        else if (*env_cmd)
        {
            if (en_m < 0 || en_points < 1)
                throw ConfigError("--m must be >= 0 and --points >= 1");
            auto const c = curve_from_argument(en_curve);
            io::CsvTable t({"theta", "Ex", "Ey", "margin", "singular"});
            for (std::size_t i = 0; i < en_points; ++i)
            {
                double const th = two_pi * static_cast<double>(i) / static_cast<double>(en_points);
                auto const e = envelope(c, th, en_m);
                t.add_row({io::format_double(th), io::format_double(e.point.x), io::format_double(e.point.y),
                           io::format_double(e.inside_margin), e.singular ? "1" : "0"});
            }
            write_table(t, en_out);
        }
        else if (*mel_cmd)
        {
            auto const e = make_ellipse_params(me_a, me_b);
            if (me_samples < 16)
                throw ConfigError("--samples must be >= 16");
            auto const v = melnikov_verdict(e, me_p, me_q, me_samples);
            write_table(melnikov_table(v.samples), me_out);
            fs::path verdict = me_verdict.empty() ? fs::path(me_out).replace_extension(".json") : fs::path(me_verdict);
            auto j = melnikov_verdict_json(v);
            io::write_json(output_path(verdict.string()), j);
            std::cout << j.dump() << "\n";
        }
        else if (*run_cmd)
        {
            auto cfg = parse_config(ru_config);
            if (!ru_out.empty())
                cfg.output = ru_out;
            cfg.output = output_path(cfg.output.string());
            auto const report = run_pipeline(cfg);
            std::cout << "run complete: " << cfg.output.string() << "/report.json\n";
            for (auto const& n : report.notes)
                std::cout << "note: " << n << "\n";
        }
        else if (*fig_cmd)
        {
            fs::path const dir = output_path(fi_run);
            for (auto const& n : emit_figures(load_run(dir), dir, fi_seed))
                std::cout << "note: " << n << "\n";
        }
        else if (*trace_cmd)
        {
            auto const c = curve_from_argument(tr_curve, tr_harmonics);
            if (fs::path(tr_out).extension() == ".json")
                io::save_curve(output_path(tr_out), c);
            else
                write_table(io::trace_table(c), tr_out);
        }
    }
    catch (ConfigError const& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
