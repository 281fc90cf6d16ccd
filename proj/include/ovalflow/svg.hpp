#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "io.hpp"
#include "oval_geometry.hpp"

namespace ovalflow::svg {

struct Box
{
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    void include(PlanePoint p)
    {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
};

inline Box bounds(std::vector<std::vector<PlanePoint>> const& sets, double pad = 0.05)
{
    Box b{1e300, -1e300, 1e300, -1e300};
    for (auto const& s : sets)
        for (auto const& p : s)
            if (std::isfinite(p.x) && std::isfinite(p.y))
                b.include(p);
    if (b.xmin > b.xmax)
        return {};
    double const dx = std::max(b.xmax - b.xmin, 1e-9);
    double const dy = std::max(b.ymax - b.ymin, 1e-9);
    return {b.xmin - pad * dx, b.xmax + pad * dx, b.ymin - pad * dy, b.ymax + pad * dy};
}

struct Stroke
{
    std::string color = "black";
    double width = 1.0;
    std::string dash;  // SVG dash array, empty for solid
    double opacity = 1.0;
};

inline std::string escape(std::string const& s)
{
    std::string out;
    for (char ch : s)
    {
        switch (ch)
        {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

inline std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

// Plot area in data coordinates mapped onto a fixed pixel frame with
// margins for ticks and labels.
class Figure
{
  public:
    Figure(Box box, double width = 640, double height = 480, bool equal_aspect = false)
        : box_(box), w_(width), h_(height)
    {
        if (equal_aspect)
        {
            double const sx = (w_ - 2 * margin) / (box_.xmax - box_.xmin);
            double const sy = (h_ - 2 * margin) / (box_.ymax - box_.ymin);
            double const s = std::min(sx, sy);
            double const cx = 0.5 * (box_.xmin + box_.xmax);
            double const cy = 0.5 * (box_.ymin + box_.ymax);
            double const hx = 0.5 * (w_ - 2 * margin) / s;
            double const hy = 0.5 * (h_ - 2 * margin) / s;
            box_ = {cx - hx, cx + hx, cy - hy, cy + hy};
        }
    }

    double px(double x) const { return margin + (x - box_.xmin) / (box_.xmax - box_.xmin) * (w_ - 2 * margin); }
    double py(double y) const { return h_ - margin - (y - box_.ymin) / (box_.ymax - box_.ymin) * (h_ - 2 * margin); }

    void polyline(std::vector<PlanePoint> const& pts, Stroke const& s = {}, bool closed = false)
    {
        if (pts.size() < 2)
            return;
        std::string d;
        for (auto const& p : pts)
        {
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                continue;
            d += fmt(px(p.x)) + "," + fmt(py(p.y)) + " ";
        }
        body_ += std::string("<") + (closed ? "polygon" : "polyline") + " points=\"" + d
                 + "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" + fmt(s.width)
                 + "\" stroke-opacity=\"" + fmt(s.opacity) + "\""
                 + (s.dash.empty() ? "" : " stroke-dasharray=\"" + s.dash + "\"") + "/>\n";
    }

    void dots(std::vector<PlanePoint> const& pts, double radius = 0.8, std::string const& color = "black")
    {
        for (auto const& p : pts)
            if (std::isfinite(p.x) && std::isfinite(p.y))
                body_ += "<circle cx=\"" + fmt(px(p.x)) + "\" cy=\"" + fmt(py(p.y)) + "\" r=\""
                         + fmt(radius) + "\" fill=\"" + color + "\"/>\n";
    }

    // Text anchored at pixel coordinates.
    void label(double x_px, double y_px, std::string const& text, double size = 12,
               std::string const& anchor = "start")
    {
        body_ += "<text x=\"" + fmt(x_px) + "\" y=\"" + fmt(y_px) + "\" font-size=\"" + fmt(size)
                 + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\">" + escape(text)
                 + "</text>\n";
    }

    void title(std::string const& text) { label(w_ / 2, margin / 2, text, 14, "middle"); }

    void axes(std::string const& xlabel, std::string const& ylabel, int ticks = 5)
    {
        double const x0 = margin, x1 = w_ - margin, y0 = h_ - margin, y1 = margin;
        body_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0)
                 + "\" height=\"" + fmt(y0 - y1) + "\" fill=\"none\" stroke=\"#444\"/>\n";
        for (int i = 0; i <= ticks; ++i)
        {
            double const fx = box_.xmin + (box_.xmax - box_.xmin) * i / ticks;
            double const fy = box_.ymin + (box_.ymax - box_.ymin) * i / ticks;
            label(px(fx), y0 + 16, tick_text(fx), 10, "middle");
            label(x0 - 6, py(fy) + 4, tick_text(fy), 10, "end");
        }
        label(w_ / 2, h_ - 8, xlabel, 12, "middle");
        body_ += "<text x=\"14\" y=\"" + fmt(h_ / 2) + "\" font-size=\"12\" font-family=\"sans-serif\" "
                 "text-anchor=\"middle\" transform=\"rotate(-90 14 " + fmt(h_ / 2) + ")\">"
                 + escape(ylabel) + "</text>\n";
    }

    std::string str() const
    {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w_) + "\" height=\"" + fmt(h_)
               + "\" viewBox=\"0 0 " + fmt(w_) + " " + fmt(h_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
               + body_ + "</svg>\n";
    }

    void write(std::filesystem::path const& path) const { io::write_atomic(path, str()); }

    static constexpr double margin = 56;

  private:
    static std::string tick_text(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
        return buf;
    }

    Box box_;
    double w_, h_;
    std::string body_;
};

inline std::vector<PlanePoint> trace_points(SupportCurve const& c, std::size_t n = 256)
{
    std::vector<PlanePoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.push_back(c.position(two_pi * static_cast<double>(i) / static_cast<double>(n)));
    return pts;
}

}  // namespace ovalflow::svg
