#pragma once

#include <string>
#include <vector>

namespace physgrid::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
};

/// Static SVG line chart with axes, ticks and a legend. Non-finite points
/// (and non-positive ones on a log axis) are skipped.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace physgrid::cli
