#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csf_flow.hpp"
#include "errors.hpp"
#include "oval_geometry.hpp"

namespace ovalflow::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr char const* curve_schema = "ovalflow.curve/1";
inline constexpr char const* trajectory_schema = "ovalflow.trajectory/1";

// Shortest text that parses back to the same double.
inline std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto const r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

inline std::string read_text(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes through a temporary sibling and renames, so readers never see a
// partial file.
inline void write_atomic(fs::path const& path, std::string_view content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline json parse_json_text(std::string const& text, std::string const& origin)
{
    try
    {
        return json::parse(text);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError(origin + ": " + e.what());
    }
}

inline json read_json(fs::path const& path) { return parse_json_text(read_text(path), path.string()); }

inline void write_json(fs::path const& path, json const& j) { write_atomic(path, j.dump(2) + "\n"); }

// Table with a header row; cells are pre-formatted strings.
class CsvTable
{
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row)
    {
        if (row.size() != header_.size())
            throw Error("csv row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    std::string str() const
    {
        std::string out;
        append_line(out, header_);
        for (auto const& r : rows_)
            append_line(out, r);
        return out;
    }

    void write(fs::path const& path) const { write_atomic(path, str()); }

  private:
    static void append_line(std::string& out, std::vector<std::string> const& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i)
        {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::vector<std::string> numbers(std::initializer_list<double> xs)
{
    std::vector<std::string> out;
    for (double x : xs)
        out.push_back(format_double(x));
    return out;
}

// Rows of a CSV with a header; cells are returned as text.
struct CsvData
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string const& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw ConfigError("csv column '" + name + "' missing");
    }
};

inline CsvData read_csv(fs::path const& path)
{
    std::istringstream in(read_text(path));
    CsvData d;
    std::string line;
    auto split = [](std::string const& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        return cells;
    };
    if (!std::getline(in, line))
        throw ConfigError(path.string() + ": empty csv");
    d.header = split(line);
    while (std::getline(in, line))
        if (!line.empty())
            d.rows.push_back(split(line));
    return d;
}

inline json curve_to_json(SupportCurve const& c)
{
    json harmonics = json::array();
    auto const& h = c.series();
    for (std::size_t n = 0; n <= h.harmonics(); ++n)
        harmonics.push_back({n, h.c[n], h.s[n]});
    return {{"schema", curve_schema}, {"harmonics", harmonics}, {"grid_size", c.grid_size()}};
}

inline SupportCurve curve_from_json(json const& j)
{
    if (!j.is_object())
        throw ConfigError("curve: expected a JSON object");
    for (auto const& [key, value] : j.items())
        if (key != "schema" && key != "harmonics" && key != "grid_size")
            throw ConfigError("curve: unknown key '" + key + "'");
    if (j.contains("schema") && j.at("schema") != curve_schema)
        throw ConfigError("curve: unsupported schema " + j.at("schema").dump());
    if (!j.contains("harmonics") || !j.at("harmonics").is_array())
        throw ConfigError("curve.harmonics: expected an array of [n, a_n, b_n]");
    std::size_t nmax = 0;
    for (auto const& t : j.at("harmonics"))
    {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_unsigned() || !t[1].is_number()
            || !t[2].is_number())
            throw ConfigError("curve.harmonics: entries must be [n, a_n, b_n] with n >= 0");
        nmax = std::max(nmax, t[0].get<std::size_t>());
    }
    if (nmax == 0)
        throw ConfigError("curve.harmonics: need at least harmonic 1");
    spectral::Series h(nmax);
    for (auto const& t : j.at("harmonics"))
    {
        auto const n = t[0].get<std::size_t>();
        h.c[n] = t[1].get<double>();
        h.s[n] = t[2].get<double>();
    }
    std::size_t grid = detail::default_grid(nmax);
    if (j.contains("grid_size"))
    {
        if (!j.at("grid_size").is_number_unsigned())
            throw ConfigError("curve.grid_size: expected a positive integer");
        grid = j.at("grid_size").get<std::size_t>();
    }
    return SupportCurve(std::move(h), grid);
}

inline void save_curve(fs::path const& path, SupportCurve const& c)
{
    write_atomic(path, curve_to_json(c).dump() + "\n");
}

inline SupportCurve load_curve(fs::path const& path) { return curve_from_json(read_json(path)); }

inline CsvTable trace_table(SupportCurve const& c)
{
    CsvTable t({"theta", "x", "y", "h", "R"});
    for (auto const& s : sample_trace(c))
        t.add_row(numbers({s.theta, s.x, s.y, s.h, s.radius}));
    return t;
}

inline CsvTable diagnostics_table(FlowTrajectory const& traj)
{
    CsvTable t({"t", "area", "entropy", "w", "knorm", "kprimenorm"});
    for (auto const& d : traj.diagnostics)
        t.add_row(numbers({d.t, d.area, d.entropy, d.w, d.knorm, d.kprimenorm}));
    return t;
}

inline std::string snapshot_name(std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%05zu.json", i);
    return buf;
}

// One curve JSON per snapshot, diagnostics.csv and a trajectory.json manifest
// (written last, so a directory with a manifest is complete).
inline void save_trajectory(fs::path const& dir, FlowTrajectory const& traj)
{
    fs::create_directories(dir);
    json snaps = json::array();
    for (std::size_t i = 0; i < traj.states.size(); ++i)
    {
        auto const name = snapshot_name(i);
        save_curve(dir / name, traj.states[i].curve);
        snaps.push_back({{"t", traj.states[i].t}, {"file", name}});
    }
    diagnostics_table(traj).write(dir / "diagnostics.csv");
    json manifest = {{"schema", trajectory_schema},
                     {"step_size", traj.step_size},
                     {"stability_factor", traj.settings.stability_factor},
                     {"recenter", traj.settings.recenter},
                     {"snapshot_stride", traj.settings.snapshot_stride},
                     {"snapshots", snaps}};
    write_json(dir / "trajectory.json", manifest);
}

inline FlowTrajectory load_trajectory(fs::path const& dir)
{
    json const m = read_json(dir / "trajectory.json");
    if (m.value("schema", "") != trajectory_schema)
        throw ConfigError((dir / "trajectory.json").string() + ": unsupported schema");
    FlowTrajectory traj;
    try
    {
        traj.step_size = m.at("step_size").get<double>();
        traj.settings.stability_factor = m.at("stability_factor").get<double>();
        traj.settings.recenter = m.at("recenter").get<bool>();
        traj.settings.snapshot_stride = m.at("snapshot_stride").get<double>();
        for (auto const& s : m.at("snapshots"))
        {
            double const t = s.at("t").get<double>();
            traj.states.push_back({t, load_curve(dir / s.at("file").get<std::string>())});
            traj.diagnostics.push_back(diagnose(traj.states.back().curve, t));
        }
    }
    catch (json::exception const& e)
    {
        throw ConfigError((dir / "trajectory.json").string() + ": " + e.what());
    }
    if (traj.states.empty())
        throw ConfigError((dir / "trajectory.json").string() + ": no snapshots");
    return traj;
}

}  // namespace ovalflow::io
