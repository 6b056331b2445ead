#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace uavdt {

struct Series {
    std::string label;
    std::string color;        // CSS color string
    std::vector<double> y;    // one value per x sample; NaN breaks the line
    double stroke_width = 1.5;
    double opacity = 1.0;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 900;
    int height = 520;
};

// Self-contained single-file SVG line chart; output bytes are a pure function
// of the inputs.
std::string render_line_chart(const ChartSpec& spec, std::span<const double> x,
                              std::span<const Series> series);

void write_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                      std::span<const double> x, std::span<const Series> series);

std::vector<double> moving_average(std::span<const double> y, int window);

} // namespace uavdt
