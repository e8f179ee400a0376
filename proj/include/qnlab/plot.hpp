#pragma once
#include <string>
#include <vector>

namespace qn {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title;
    std::string xlabel, ylabel;
    bool logx = false, logy = false;
    std::vector<Series> series;
};

// deterministic SVG text (fixed number formatting, no timestamps)
std::string render_svg(const PlotSpec& spec);
void write_svg(const std::string& path, const PlotSpec& spec);

}  // namespace qn
