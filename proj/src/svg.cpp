#include "uavdt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace uavdt {

namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

std::string coord(double v) { return fmt("%.2f", v); }

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Largest "nice" step (1, 2, or 5 times a power of ten) not above the raw
// range/5, so charts get about five labeled ticks.
double nice_step(double range) {
    if (!(range > 0)) return 1.0;
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {5.0, 2.0, 1.0})
        if (m * mag <= raw) return m * mag;
    return mag;
}

struct AxisRange {
    double lo = 0, hi = 1;
};

AxisRange data_range(std::span<const double> values) {
    AxisRange r{std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
    for (double v : values)
        if (std::isfinite(v)) {
            r.lo = std::min(r.lo, v);
            r.hi = std::max(r.hi, v);
        }
    if (!std::isfinite(r.lo)) return {0, 1};
    if (r.lo == r.hi) return {r.lo - 1, r.hi + 1};
    return r;
}

} // namespace

std::string render_line_chart(const ChartSpec& spec, std::span<const double> x,
                              std::span<const Series> series) {
    for (const Series& s : series)
        if (s.y.size() != x.size())
            throw std::invalid_argument("render_line_chart: series '" + s.label + "' has " +
                                        std::to_string(s.y.size()) + " samples, x has " +
                                        std::to_string(x.size()));

    const double ml = 70, mr = 160, mt = 40, mb = 50;
    const double w = spec.width, h = spec.height;
    const double pw = w - ml - mr, ph = h - mt - mb;

    AxisRange xr = data_range(x);
    std::vector<double> all_y;
    for (const Series& s : series) all_y.insert(all_y.end(), s.y.begin(), s.y.end());
    AxisRange yr = data_range(all_y);

    const auto px = [&](double v) { return ml + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto py = [&](double v) { return mt + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
           "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
           std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + coord(ml + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(spec.title) + "</text>\n";

    // gridlines and ticks
    const double ys = nice_step(yr.hi - yr.lo);
    for (double v = std::ceil(yr.lo / ys) * ys; v <= yr.hi + 1e-9 * ys; v += ys) {
        const double yy = py(v);
        svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(yy) + "\" x2=\"" + coord(ml + pw) +
               "\" y2=\"" + coord(yy) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + coord(ml - 8) + "\" y=\"" + coord(yy + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt("%.6g", v) + "</text>\n";
    }
    const double xs = nice_step(xr.hi - xr.lo);
    for (double v = std::ceil(xr.lo / xs) * xs; v <= xr.hi + 1e-9 * xs; v += xs) {
        const double xx = px(v);
        svg += "<line x1=\"" + coord(xx) + "\" y1=\"" + coord(mt) + "\" x2=\"" + coord(xx) +
               "\" y2=\"" + coord(mt + ph) + "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + coord(xx) + "\" y=\"" + coord(mt + ph + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               fmt("%.6g", v) + "</text>\n";
    }

    // axes
    svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(mt) + "\" x2=\"" + coord(ml) +
           "\" y2=\"" + coord(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + coord(ml) + "\" y1=\"" + coord(mt + ph) + "\" x2=\"" + coord(ml + pw) +
           "\" y2=\"" + coord(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + coord(ml + pw / 2) + "\" y=\"" + coord(h - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape_xml(spec.x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + coord(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 18 " + coord(mt + ph / 2) + ")\">" +
           escape_xml(spec.y_label) + "</text>\n";

    // series polylines; NaN samples split a series into separate segments
    for (const Series& s : series) {
        std::string points;
        const auto flush = [&]() {
            if (points.empty()) return;
            svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" +
                   coord(s.stroke_width) + "\" stroke-opacity=\"" + coord(s.opacity) +
                   "\" points=\"" + points + "\"/>\n";
            points.clear();
        };
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(s.y[i])) {
                flush();
                continue;
            }
            if (!points.empty()) points += " ";
            points += coord(px(x[i])) + "," + coord(py(s.y[i]));
        }
        flush();
    }

    // legend
    double ly = mt + 10;
    for (const Series& s : series) {
        svg += "<line x1=\"" + coord(ml + pw + 14) + "\" y1=\"" + coord(ly) + "\" x2=\"" +
               coord(ml + pw + 40) + "\" y2=\"" + coord(ly) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"" + coord(std::max(s.stroke_width, 2.0)) +
               "\" stroke-opacity=\"" + coord(s.opacity) + "\"/>\n";
        svg += "<text x=\"" + coord(ml + pw + 46) + "\" y=\"" + coord(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label) +
               "</text>\n";
        ly += 18;
    }

    svg += "</svg>\n";
    return svg;
}

void write_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                      std::span<const double> x, std::span<const Series> series) {
    const std::string svg = render_line_chart(spec, x, series);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!f) throw std::runtime_error("failed writing: " + path.string());
}

std::vector<double> moving_average(std::span<const double> y, int window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    std::vector<double> out(y.size());
    double sum = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sum += y[i];
        if (i >= static_cast<std::size_t>(window)) sum -= y[i - window];
        const auto n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
        out[i] = sum / static_cast<double>(n);
    }
    return out;
}

} // namespace uavdt
