#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "billiard.hpp"
#include "csf_flow.hpp"
#include "ellipse_melnikov.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "normal_orbits.hpp"
#include "oval_geometry.hpp"
#include "periodic_orbits.hpp"
#include "svg.hpp"

namespace ovalflow {

inline constexpr char const* report_schema = "ovalflow.report/1";

struct CurveSpec
{
    std::string kind;            // circle, ellipse, constant_width, file
    std::vector<double> params;  // circle: r; ellipse: a, b; constant_width: d, n1, amp1, ...
    std::filesystem::path path;  // kind == file
    std::size_t harmonics = 32;

    [[nodiscard]] std::string describe() const
    {
        if (kind == "file")
            return "file(" + path.string() + ")";
        std::string s = kind + "(";
        for (std::size_t i = 0; i < params.size(); ++i)
            s += (i ? "," : "") + io::format_double(params[i]);
        return s + ")";
    }

    [[nodiscard]] bool is_ellipse() const { return kind == "ellipse" && params[0] > params[1]; }
};

// "circle(1)", "ellipse(1.25, 0.8)", "constant_width(2, 3, 0.05)" (odd
// frequency and cosine amplitude pairs).
inline std::optional<CurveSpec> parse_curve_expression(std::string const& text)
{
    static std::regex const form(R"(^\s*([a-z_]+)\s*\(([^()]*)\)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, form))
        return std::nullopt;
    CurveSpec spec;
    spec.kind = m[1];
    std::stringstream args(m[2]);
    std::string item;
    while (std::getline(args, item, ','))
    {
        try
        {
            std::size_t used = 0;
            spec.params.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        }
        catch (std::exception const&)
        {
            throw ConfigError("curve expression '" + text + "': bad number '" + item + "'");
        }
    }
    return spec;
}

inline void validate_curve_spec(CurveSpec const& s, std::string const& where)
{
    auto need = [&](bool ok, std::string const& msg) {
        if (!ok)
            throw ConfigError(where + ": " + msg);
    };
    need(s.harmonics >= 1 && s.harmonics <= 4096, "harmonics must lie in [1, 4096]");
    if (s.kind == "circle")
        need(s.params.size() == 1 && s.params[0] > 0, "circle(r) needs r > 0");
    else if (s.kind == "ellipse")
        need(s.params.size() == 2 && s.params[1] > 0 && s.params[0] >= s.params[1],
             "ellipse(a, b) needs a >= b > 0");
    else if (s.kind == "constant_width")
        need(s.params.size() >= 1 && s.params.size() % 2 == 1 && s.params[0] > 0,
             "constant_width(d, n1, amp1, ...) needs d > 0 and frequency/amplitude pairs");
    else if (s.kind == "file")
        need(std::filesystem::exists(s.path), "curve file " + s.path.string() + " does not exist");
    else
        throw ConfigError(where + ": unknown curve kind '" + s.kind + "'");
}

inline SupportCurve build_curve(CurveSpec const& s)
{
    validate_curve_spec(s, "curve");
    if (s.kind == "circle")
        return make_circle(s.params[0], s.harmonics);
    if (s.kind == "ellipse")
        return make_ellipse(s.params[0], s.params[1], s.harmonics);
    if (s.kind == "constant_width")
    {
        std::vector<Harmonic> odd;
        for (std::size_t i = 1; i + 1 < s.params.size(); i += 2)
        {
            double const f = s.params[i];
            if (f != std::floor(f))
                throw ConfigError("constant_width: frequency must be an integer");
            odd.push_back({static_cast<int>(f), s.params[i + 1], 0.0});
        }
        return make_constant_width(s.params[0], odd, s.harmonics);
    }
    return io::load_curve(s.path);
}

// Curve argument on the command line: an expression or a curve JSON path.
inline SupportCurve curve_from_argument(std::string const& arg, std::size_t harmonics = 32)
{
    if (auto spec = parse_curve_expression(arg))
    {
        spec->harmonics = harmonics;
        return build_curve(*spec);
    }
    return io::load_curve(arg);
}

struct NpSettings
{
    bool enabled = true;
    int n_max = 4;
    double stride = 0.5;  // flow time between analysed snapshots
};

struct MelnikovSettings
{
    bool enabled = true;
    std::vector<std::pair<int, int>> resonances{{1, 2}};
    std::size_t samples = 128;
};

struct RunConfig
{
    CurveSpec curve;
    double t_end = 0;
    double dt = 1e-3;
    double stride = 0.05;
    bool diameters = true;
    NpSettings np;
    MelnikovSettings melnikov;
    std::filesystem::path output = "run";
    std::uint64_t seed = 1;
    DiameterTolerances diameter_tol;
    double max_jump = 0.25;
    NormalOrbitOptions np_options;
};

namespace detail {

using io::json;

inline void allow_keys(json const& j, std::string const& path, std::vector<std::string> const& keys)
{
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
    for (auto const& [key, value] : j.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("unknown key '" + (path.empty() ? key : path + "." + key) + "'");
}

inline double get_number(json const& j, std::string const& key, std::string const& path)
{
    if (!j.at(key).is_number())
        throw ConfigError(path + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline double get_positive(json const& j, std::string const& key, std::string const& path)
{
    double const v = get_number(j, key, path);
    if (!(v > 0) || !std::isfinite(v))
        throw ConfigError(path + "." + key + ": must be positive");
    return v;
}

inline long get_integer(json const& j, std::string const& key, std::string const& path, long lo)
{
    if (!j.at(key).is_number_integer() || j.at(key).get<long>() < lo)
        throw ConfigError(path + "." + key + ": expected an integer >= " + std::to_string(lo));
    return j.at(key).get<long>();
}

inline CurveSpec parse_curve_field(json const& j, std::filesystem::path const& base,
                                   std::size_t harmonics)
{
    CurveSpec spec;
    if (j.is_string())
    {
        auto const text = j.get<std::string>();
        if (auto e = parse_curve_expression(text))
            spec = *e;
        else
        {
            spec.kind = "file";
            spec.path = base / text;
        }
    }
    else if (j.is_object())
    {
        if (!j.contains("type") || !j.at("type").is_string())
            throw ConfigError("curve.type: expected a string");
        spec.kind = j.at("type").get<std::string>();
        if (spec.kind == "circle")
        {
            allow_keys(j, "curve", {"type", "radius", "harmonics"});
            spec.params = {j.contains("radius") ? get_number(j, "radius", "curve") : 1.0};
        }
        else if (spec.kind == "ellipse")
        {
            allow_keys(j, "curve", {"type", "a", "b", "harmonics"});
            if (!j.contains("a") || !j.contains("b"))
                throw ConfigError("curve: ellipse needs a and b");
            spec.params = {get_number(j, "a", "curve"), get_number(j, "b", "curve")};
        }
        else if (spec.kind == "constant_width")
        {
            allow_keys(j, "curve", {"type", "width", "odd", "harmonics"});
            spec.params = {j.contains("width") ? get_number(j, "width", "curve") : 2.0};
            if (j.contains("odd"))
            {
                if (!j.at("odd").is_array())
                    throw ConfigError("curve.odd: expected [[n, amplitude], ...]");
                for (auto const& t : j.at("odd"))
                {
                    if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number())
                        throw ConfigError("curve.odd: entries must be [n, amplitude]");
                    spec.params.push_back(t[0].get<double>());
                    spec.params.push_back(t[1].get<double>());
                }
            }
        }
        else if (spec.kind == "file")
        {
            allow_keys(j, "curve", {"type", "path"});
            if (!j.contains("path") || !j.at("path").is_string())
                throw ConfigError("curve.path: expected a string");
            spec.path = base / j.at("path").get<std::string>();
        }
        else
            throw ConfigError("curve.type: unknown curve kind '" + spec.kind + "'");
        if (j.contains("harmonics"))
            harmonics = static_cast<std::size_t>(get_integer(j, "harmonics", "curve", 1));
    }
    else
        throw ConfigError("curve: expected an expression string or an object");
    spec.harmonics = harmonics;
    validate_curve_spec(spec, "curve");
    return spec;
}

}  // namespace detail

inline RunConfig parse_config_json(io::json const& j, std::filesystem::path const& base = ".")
{
    using detail::allow_keys;
    allow_keys(j, "", {"curve", "harmonics", "t_end", "dt", "stride", "analyses", "output", "seed",
                       "tolerances"});
    RunConfig cfg;
    std::size_t harmonics = 32;
    if (j.contains("harmonics"))
        harmonics = static_cast<std::size_t>(detail::get_integer(j, "harmonics", "config", 1));
    if (!j.contains("curve"))
        throw ConfigError("missing key 'curve'");
    cfg.curve = detail::parse_curve_field(j.at("curve"), base, harmonics);
    if (!j.contains("t_end"))
        throw ConfigError("missing key 't_end'");
    cfg.t_end = detail::get_positive(j, "t_end", "config");
    if (j.contains("dt"))
        cfg.dt = detail::get_positive(j, "dt", "config");
    if (j.contains("stride"))
        cfg.stride = detail::get_positive(j, "stride", "config");
    if (j.contains("output"))
    {
        if (!j.at("output").is_string())
            throw ConfigError("output: expected a path string");
        cfg.output = j.at("output").get<std::string>();
    }
    if (j.contains("seed"))
        cfg.seed = static_cast<std::uint64_t>(detail::get_integer(j, "seed", "config", 0));
    if (j.contains("analyses"))
    {
        auto const& a = j.at("analyses");
        allow_keys(a, "analyses", {"diameters", "np", "melnikov"});
        if (a.contains("diameters"))
        {
            if (!a.at("diameters").is_boolean())
                throw ConfigError("analyses.diameters: expected true or false");
            cfg.diameters = a.at("diameters").get<bool>();
        }
        if (a.contains("np"))
        {
            auto const& n = a.at("np");
            if (n.is_boolean())
                cfg.np.enabled = n.get<bool>();
            else
            {
                allow_keys(n, "analyses.np", {"n_max", "stride"});
                if (n.contains("n_max"))
                    cfg.np.n_max = static_cast<int>(detail::get_integer(n, "n_max", "analyses.np", 1));
                if (n.contains("stride"))
                    cfg.np.stride = detail::get_positive(n, "stride", "analyses.np");
            }
        }
        if (a.contains("melnikov"))
        {
            auto const& m = a.at("melnikov");
            if (m.is_boolean())
                cfg.melnikov.enabled = m.get<bool>();
            else
            {
                allow_keys(m, "analyses.melnikov", {"resonances", "samples"});
                if (m.contains("samples"))
                    cfg.melnikov.samples = static_cast<std::size_t>(
                        detail::get_integer(m, "samples", "analyses.melnikov", 16));
                if (m.contains("resonances"))
                {
                    cfg.melnikov.resonances.clear();
                    if (!m.at("resonances").is_array())
                        throw ConfigError("analyses.melnikov.resonances: expected [[p, q], ...]");
                    for (auto const& r : m.at("resonances"))
                    {
                        if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer()
                            || !r[1].is_number_integer() || r[0].get<int>() <= 0 || r[1].get<int>() <= 0)
                            throw ConfigError("analyses.melnikov.resonances: entries must be [p, q] with p, q > 0");
                        cfg.melnikov.resonances.emplace_back(r[0].get<int>(), r[1].get<int>());
                    }
                }
            }
        }
    }
    if (j.contains("tolerances"))
    {
        auto const& t = j.at("tolerances");
        allow_keys(t, "tolerances", {"diameter_root", "parabolic_rel", "continuum_rel", "max_jump",
                                     "np_residual", "np_continuum", "np_perpendicular",
                                     "np_scan_points"});
        auto pos = [&](char const* key, double& dst) {
            if (t.contains(key))
                dst = detail::get_positive(t, key, "tolerances");
        };
        pos("diameter_root", cfg.diameter_tol.root);
        pos("parabolic_rel", cfg.diameter_tol.parabolic_rel);
        pos("continuum_rel", cfg.diameter_tol.continuum_rel);
        pos("max_jump", cfg.max_jump);
        pos("np_residual", cfg.np_options.residual_tol);
        pos("np_continuum", cfg.np_options.continuum_tol);
        pos("np_perpendicular", cfg.np_options.perpendicular_tol);
        if (t.contains("np_scan_points"))
            cfg.np_options.scan_points =
                static_cast<std::size_t>(detail::get_integer(t, "np_scan_points", "tolerances", 16));
    }
    return cfg;
}

inline RunConfig parse_config(std::filesystem::path const& path)
{
    if (!std::filesystem::exists(path))
        throw ConfigError("config file " + path.string() + " does not exist");
    return parse_config_json(io::read_json(path), path.parent_path());
}

struct NpRow
{
    double t = 0;
    int n = 0;
    long count = 0;  // irreducible orbits, -1 for a continuum
    double min_abs_dA = 0;
    double evolute_margin = 0;
};

struct MelnikovVerdict
{
    int p = 0;
    int q = 0;
    bool admissible = false;
    double lambda = 0;
    double modulus = 0;
    double delta = 0;
    double amplitude = 0;
    double noise_floor = 0;
    bool destroyed = false;
    std::vector<MelnikovSample> samples;
};

struct RunReport
{
    std::string schema = report_schema;
    std::string status = "ok";
    std::string error;
    std::string curve;
    std::vector<FlowDiagnostics> diagnostics;
    bool diameter_continuum = false;
    std::vector<DiameterBranch> branches;
    std::vector<NpRow> np;
    std::vector<MelnikovVerdict> melnikov;
    std::vector<std::string> notes;
    std::map<std::string, std::string> files;
};

inline io::json melnikov_verdict_json(MelnikovVerdict const& v)
{
    return {{"p", v.p},           {"q", v.q},
            {"admissible", v.admissible}, {"lambda", v.lambda},
            {"modulus", v.modulus}, {"delta", v.delta},
            {"amplitude", v.amplitude}, {"noise_floor", v.noise_floor},
            {"destroyed", v.destroyed}};
}

inline io::json report_to_json(RunReport const& r)
{
    using io::json;
    json diag = json::array();
    for (auto const& d : r.diagnostics)
        diag.push_back({{"t", d.t}, {"area", d.area}, {"entropy", d.entropy}, {"w", d.w},
                        {"knorm", d.knorm}, {"kprimenorm", d.kprimenorm}});
    json branches = json::array();
    for (auto const& b : r.branches)
    {
        json samples = json::array();
        for (auto const& s : b.samples)
            samples.push_back({s.t, s.theta, s.length, to_string(s.klass), s.f_prime});
        branches.push_back({{"terminal_event", to_string(b.terminal_event)}, {"samples", samples}});
    }
    json np = json::array();
    for (auto const& row : r.np)
        np.push_back({{"t", row.t}, {"n", row.n}, {"count", row.count},
                      {"min_abs_dA", row.min_abs_dA}, {"evolute_margin", row.evolute_margin}});
    json mel = json::array();
    for (auto const& v : r.melnikov)
    {
        json j = melnikov_verdict_json(v);
        json samples = json::array();
        for (auto const& s : v.samples)
            samples.push_back({s.t, s.w});
        j["samples"] = samples;
        mel.push_back(j);
    }
    return {{"schema", r.schema},         {"status", r.status},
            {"error", r.error},           {"curve", r.curve},
            {"diagnostics", diag},        {"diameter_continuum", r.diameter_continuum},
            {"branches", branches},       {"np", np},
            {"melnikov", mel},            {"notes", r.notes},
            {"files", r.files}};
}

inline OrbitClass orbit_class_from_string(std::string const& s)
{
    if (s == "hyperbolic")
        return OrbitClass::hyperbolic;
    if (s == "elliptic")
        return OrbitClass::elliptic;
    if (s == "parabolic")
        return OrbitClass::parabolic;
    throw ConfigError("unknown orbit class '" + s + "'");
}

inline RunReport report_from_json(io::json const& j)
{
    RunReport r;
    try
    {
        if (j.at("schema") != report_schema)
            throw ConfigError("report: unsupported schema");
        r.status = j.at("status").get<std::string>();
        r.error = j.at("error").get<std::string>();
        r.curve = j.at("curve").get<std::string>();
        for (auto const& d : j.at("diagnostics"))
            r.diagnostics.push_back({d.at("t"), d.at("area"), d.at("entropy"), d.at("w"),
                                     d.at("knorm"), d.at("kprimenorm")});
        r.diameter_continuum = j.at("diameter_continuum").get<bool>();
        for (auto const& b : j.at("branches"))
        {
            DiameterBranch br;
            auto const ev = b.at("terminal_event").get<std::string>();
            br.terminal_event = ev == "collided" ? BranchEvent::collided
                                : ev == "lost_root" ? BranchEvent::lost_root
                                                    : BranchEvent::survived;
            for (auto const& s : b.at("samples"))
                br.samples.push_back({s[0].get<double>(), s[1].get<double>(),
                                      orbit_class_from_string(s[3].get<std::string>()),
                                      s[4].get<double>(), s[2].get<double>()});
            r.branches.push_back(std::move(br));
        }
        for (auto const& n : j.at("np"))
            r.np.push_back({n.at("t"), n.at("n"), n.at("count"), n.at("min_abs_dA"),
                            n.at("evolute_margin")});
        for (auto const& m : j.at("melnikov"))
        {
            MelnikovVerdict v;
            v.p = m.at("p");
            v.q = m.at("q");
            v.admissible = m.at("admissible");
            v.lambda = m.at("lambda");
            v.modulus = m.at("modulus");
            v.delta = m.at("delta");
            v.amplitude = m.at("amplitude");
            v.noise_floor = m.at("noise_floor");
            v.destroyed = m.at("destroyed");
            for (auto const& s : m.at("samples"))
                v.samples.push_back({s[0].get<double>(), s[1].get<double>()});
            r.melnikov.push_back(std::move(v));
        }
        r.notes = j.at("notes").get<std::vector<std::string>>();
        r.files = j.at("files").get<std::map<std::string, std::string>>();
    }
    catch (io::json::exception const& e)
    {
        throw ConfigError(std::string("report: ") + e.what());
    }
    return r;
}

inline io::CsvTable branch_table(std::vector<DiameterBranch> const& branches)
{
    io::CsvTable t({"t", "theta", "length", "class", "f_prime"});
    for (auto const& b : branches)
        for (auto const& s : b.samples)
            t.add_row({io::format_double(s.t), io::format_double(s.theta),
                       io::format_double(s.length), to_string(s.klass), io::format_double(s.f_prime)});
    return t;
}

inline io::CsvTable np_table(std::vector<NpRow> const& rows)
{
    io::CsvTable t({"t", "n", "count", "min_abs_dA", "evolute_margin"});
    for (auto const& r : rows)
        t.add_row({io::format_double(r.t), std::to_string(r.n), std::to_string(r.count),
                   io::format_double(r.min_abs_dA), io::format_double(r.evolute_margin)});
    return t;
}

inline io::CsvTable melnikov_table(std::vector<MelnikovSample> const& samples)
{
    io::CsvTable t({"t", "W1"});
    for (auto const& s : samples)
        t.add_row(io::numbers({s.t, s.w}));
    return t;
}

// Diameter branches followed from the first snapshot with isolated diameters.
inline std::vector<DiameterBranch> trace_diameters(FlowTrajectory const& traj, RunConfig const& cfg,
                                                   bool& continuum_at_start)
{
    ContinuationSettings cs;
    cs.max_jump = cfg.max_jump;
    cs.tol = cfg.diameter_tol;
    continuum_at_start = false;
    for (std::size_t i = 0; i < traj.states.size(); ++i)
    {
        auto const scan = find_diameters(traj.states[i].curve, cfg.diameter_tol);
        if (scan.continuum)
        {
            if (i == 0)
                continuum_at_start = true;
            continue;
        }
        FlowTrajectory tail;
        tail.step_size = traj.step_size;
        tail.settings = traj.settings;
        tail.states.assign(traj.states.begin() + static_cast<std::ptrdiff_t>(i), traj.states.end());
        std::vector<DiameterBranch> out;
        for (auto const& orbit : scan.orbits)
            out.push_back(continue_branch(tail, orbit, cs));
        return out;
    }
    return {};
}

inline std::vector<NpRow> np_rows(SupportCurve const& c, double t, RunConfig const& cfg)
{
    std::vector<NpRow> rows;
    double const margin = evolute_containment(c).margin;
    for (int n = 1; n <= cfg.np.n_max; ++n)
    {
        auto const scan = np_detect(c, n, cfg.np_options);
        auto const cert = diffeo_certificate(c, n);
        rows.push_back({t, n, scan.continuum ? -1L : static_cast<long>(scan.irreducible_count()),
                        cert.min_abs_dA, margin});
    }
    return rows;
}

inline MelnikovVerdict melnikov_verdict(EllipseParams const& e, int p, int q, std::size_t samples)
{
    MelnikovVerdict v;
    v.p = p;
    v.q = q;
    auto const res = resonance_solve(e, p, q);
    if (!res)
        return v;
    v.admissible = true;
    v.lambda = res->lambda;
    v.modulus = res->modulus;
    v.delta = res->delta;
    auto const curve = melnikov_curve(e, *res, samples);
    v.amplitude = curve.amplitude;
    v.noise_floor = curve.noise_floor;
    v.destroyed = curve.destroyed;
    v.samples = curve.samples;
    return v;
}

namespace detail {

inline void write_report(std::filesystem::path const& dir, RunReport const& r)
{
    io::write_json(dir / "report.json", report_to_json(r));
}

[[noreturn]] inline void fail_run(std::filesystem::path const& dir, RunReport& r,
                                  std::string const& stage, std::exception const& e, bool config)
{
    r.status = "failed";
    r.error = stage + ": " + e.what();
    io::write_atomic(dir / "FAILED", r.error + "\n");
    write_report(dir, r);
    if (config)
        throw ConfigError(r.error);
    throw NumericalError(r.error);
}

}  // namespace detail

// evolve -> diameters -> normal orbits -> Melnikov -> report. Every artifact
// is written atomically; on failure the partial outputs stay in place next to
// a FAILED marker and the error is rethrown with the stage name.
inline RunReport run_pipeline(RunConfig const& cfg)
{
    namespace fs = std::filesystem;
    fs::path const out = cfg.output;
    fs::create_directories(out);
    fs::remove(out / "FAILED");
    RunReport report;
    report.curve = cfg.curve.describe();
    std::string stage = "evolve";
    FlowTrajectory traj;
    try
    {
        auto const curve = build_curve(cfg.curve);
        FlowSettings settings;
        settings.snapshot_stride = cfg.stride;
        traj = evolve(FlowState{0.0, curve}, cfg.t_end, cfg.dt, settings);
        io::save_trajectory(out / "traj", traj);
        report.diagnostics = traj.diagnostics;
        report.files["trajectory"] = "traj/trajectory.json";
        report.files["diagnostics"] = "traj/diagnostics.csv";

        if (cfg.diameters)
        {
            stage = "diameters";
            report.branches = trace_diameters(traj, cfg, report.diameter_continuum);
            if (report.diameter_continuum)
                report.notes.push_back("diameters form a continuum at t = 0");
            branch_table(report.branches).write(out / "branches.csv");
            report.files["branches"] = "branches.csv";
        }

        if (cfg.np.enabled)
        {
            stage = "np";
            double next = 0.0;
            for (std::size_t i = 0; i < traj.states.size(); ++i)
            {
                auto const& s = traj.states[i];
                bool const last = i + 1 == traj.states.size();
                if (s.t + 1e-9 < next && !last)
                    continue;
                next = s.t + cfg.np.stride;
                try
                {
                    auto rows = np_rows(s.curve, s.t, cfg);
                    report.np.insert(report.np.end(), rows.begin(), rows.end());
                }
                catch (NumericalError const& e)
                {
                    throw NumericalError("t = " + io::format_double(s.t) + ": " + e.what());
                }
            }
            np_table(report.np).write(out / "np_report.csv");
            report.files["np"] = "np_report.csv";
        }

        if (cfg.melnikov.enabled)
        {
            stage = "melnikov";
            if (cfg.curve.kind == "circle"
                || (cfg.curve.kind == "ellipse" && cfg.curve.params[0] == cfg.curve.params[1]))
                report.notes.push_back("melnikov skipped: no hyperbolic caustics in a circle");
            else if (!cfg.curve.is_ellipse())
                report.notes.push_back("melnikov skipped: the analysis applies to ellipses only");
            else
            {
                auto const e = make_ellipse_params(cfg.curve.params[0], cfg.curve.params[1]);
                for (auto [p, q] : cfg.melnikov.resonances)
                {
                    auto v = melnikov_verdict(e, p, q, cfg.melnikov.samples);
                    std::string const tag = std::to_string(p) + "_" + std::to_string(q);
                    if (!v.admissible)
                        report.notes.push_back("melnikov (" + std::to_string(p) + "," + std::to_string(2 * q)
                                               + ") not admissible: rotation outside the caustic range");
                    else
                    {
                        melnikov_table(v.samples).write(out / ("melnikov_" + tag + ".csv"));
                        report.files["melnikov_" + tag] = "melnikov_" + tag + ".csv";
                    }
                    report.melnikov.push_back(std::move(v));
                }
            }
        }
    }
    catch (FlowError const& e)
    {
        detail::fail_run(out, report, stage + " (flow time " + io::format_double(e.time()) + ")", e, false);
    }
    catch (ConfigError const& e)
    {
        detail::fail_run(out, report, stage, e, true);
    }
    catch (Error const& e)
    {
        detail::fail_run(out, report, stage, e, false);
    }
    detail::write_report(out, report);
    return report;
}

struct RunArtifacts
{
    RunReport report;
    FlowTrajectory trajectory;
};

inline RunArtifacts load_run(std::filesystem::path const& dir)
{
    return {report_from_json(io::read_json(dir / "report.json")), io::load_trajectory(dir / "traj")};
}

// Phase portrait: orbits from a seeded set of starting points, plotted in
// (theta, phi). Orbits that approach grazing incidence are cut short.
inline svg::Figure portrait_figure(SupportCurve const& c, std::size_t samples, std::size_t iters,
                                   std::uint64_t seed = 1)
{
    svg::Figure fig({0, two_pi, 0, pi}, 720, 400);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> th(0, two_pi);
    std::uniform_real_distribution<double> ph(0.05, pi - 0.05);
    char const* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
    for (std::size_t k = 0; k < samples; ++k)
    {
        std::vector<PlanePoint> pts;
        PhasePoint p{th(rng), ph(rng)};
        try
        {
            for (std::size_t i = 0; i < iters; ++i)
            {
                pts.push_back({p.theta, p.phi});
                p = reflect(c, p).to;
            }
        }
        catch (NumericalError const&)
        {
        }
        fig.dots(pts, 0.6, colors[k % 6]);
    }
    fig.axes("theta", "phi");
    return fig;
}

inline std::vector<PlanePoint> envelope_points(SupportCurve const& c, int m, std::size_t n = 512)
{
    std::vector<PlanePoint> pts;
    for (std::size_t i = 0; i < n; ++i)
    {
        double const t = two_pi * static_cast<double>(i) / static_cast<double>(n);
        auto const e = envelope(c, t, m);
        pts.push_back(e.singular ? PlanePoint{NAN, NAN} : e.point);
    }
    return pts;
}

// SVG figures next to the run outputs. Returns notes for skipped sections.
inline std::vector<std::string> emit_figures(RunArtifacts const& run, std::filesystem::path const& dir,
                                             std::uint64_t seed = 1)
{
    namespace fs = std::filesystem;
    std::vector<std::string> notes;
    fs::path const figs = dir / "figures";
    fs::create_directories(figs);
    auto const& states = run.trajectory.states;

    std::vector<std::vector<PlanePoint>> traces;
    std::size_t const every = std::max<std::size_t>(1, states.size() / 8);
    for (std::size_t i = 0; i < states.size(); i += every)
        traces.push_back(svg::trace_points(states[i].curve));
    traces.push_back(svg::trace_points(states.back().curve));
    {
        svg::Figure fig(svg::bounds(traces), 560, 560, true);
        for (std::size_t i = 0; i < traces.size(); ++i)
        {
            double const s = traces.size() > 1 ? static_cast<double>(i) / (traces.size() - 1) : 1.0;
            fig.polyline(traces[i], {"#1f4e79", 1.0, "", 0.25 + 0.75 * s}, true);
        }
        fig.axes("x", "y");
        fig.title("curve evolution, t = " + io::format_double(states.front().t) + " to "
                  + io::format_double(states.back().t));
        fig.write(figs / "evolution.svg");
    }

    for (auto const& [name, idx] : {std::pair<char const*, std::size_t>{"first", 0},
                                    {"last", states.size() - 1}})
    {
        auto fig = portrait_figure(states[idx].curve, 24, 300, seed);
        fig.title("phase portrait, t = " + io::format_double(states[idx].t));
        fig.write(figs / (std::string("portrait_") + name + ".svg"));

        auto const& c = states[idx].curve;
        std::vector<std::vector<PlanePoint>> sets{svg::trace_points(c), envelope_points(c, 0)};
        for (int m = 1; m <= 3; ++m)
            sets.push_back(envelope_points(c, m));
        svg::Figure env(svg::bounds(sets), 560, 560, true);
        env.polyline(sets[0], {"black", 1.5, ""}, true);
        env.polyline(sets[1], {"#d62728", 1.0, ""});
        char const* colors[] = {"#1f77b4", "#2ca02c", "#9467bd"};
        for (int m = 1; m <= 3; ++m)
            env.polyline(sets[static_cast<std::size_t>(m) + 1], {colors[m - 1], 0.8, "4 2"});
        env.axes("x", "y");
        env.title("evolute and envelopes E1..E3, t = " + io::format_double(states[idx].t));
        env.write(figs / (std::string("envelope_") + name + ".svg"));
    }

    if (run.report.branches.empty())
        notes.push_back("bifurcation diagram skipped: no diameter branches");
    else
    {
        svg::Figure fig({states.front().t, states.back().t, 0, pi}, 720, 420);
        for (auto const& b : run.report.branches)
        {
            for (std::size_t i = 1; i < b.samples.size(); ++i)
            {
                auto const& s0 = b.samples[i - 1];
                auto const& s1 = b.samples[i];
                if (std::abs(s1.theta - s0.theta) > pi / 2)
                    continue;
                std::string dash = s0.klass == OrbitClass::hyperbolic ? "6 3"
                                   : s0.klass == OrbitClass::parabolic ? "1 3" : "";
                std::string color = s0.klass == OrbitClass::hyperbolic ? "#d62728" : "#1f77b4";
                fig.polyline({{s0.t, s0.theta}, {s1.t, s1.theta}}, {color, 2.0, dash});
            }
        }
        fig.axes("t", "theta");
        fig.title("diameter branches (solid: elliptic, dashed: hyperbolic)");
        fig.write(figs / "bifurcation.svg");
    }

    if (run.report.melnikov.empty())
        notes.push_back("melnikov figure skipped: no melnikov results");
    for (auto const& v : run.report.melnikov)
    {
        if (!v.admissible || v.samples.empty())
            continue;
        std::vector<PlanePoint> pts;
        for (auto const& s : v.samples)
            pts.push_back({s.t, s.w});
        svg::Figure fig(svg::bounds({pts}), 640, 400);
        fig.polyline(pts, {"#1f4e79", 1.5, ""});
        fig.axes("t", "W1");
        fig.title("Melnikov potential (" + std::to_string(v.p) + "," + std::to_string(2 * v.q)
                  + "), amplitude " + io::format_double(v.amplitude));
        fig.write(figs / ("melnikov_" + std::to_string(v.p) + "_" + std::to_string(v.q) + ".svg"));
    }
    return notes;
}

}  // namespace ovalflow
