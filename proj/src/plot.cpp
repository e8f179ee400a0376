#include "qnlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qn {

namespace {

constexpr double W = 640, Hh = 420, ML = 80, MR = 150, MT = 40, MB = 60;

const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return b;
}

std::string tick_label(double v, bool log) {
    char b[32];
    if (log)
        std::snprintf(b, sizeof b, "1e%d", static_cast<int>(std::lround(v)));
    else
        std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else
            o += c;
    }
    return o;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto tx = [&](double v) { return spec.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.logy ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!spec.logx || x > 0) && (!spec.logy || y > 0);
    };
    for (const auto& s : spec.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + (y0 == 0 ? 1 : std::abs(y0) * 0.1);
    double pw = W - ML - MR, ph = Hh - MT - MB;
    auto px = [&](double v) { return ML + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return MT + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(ML + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title) << "</text>\n";
    o << "<rect x=\"" << num(ML) << "\" y=\"" << num(MT) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
        double sx = ML + pw * k / 4.0, sy = MT + ph - ph * k / 4.0;
        o << "<text x=\"" << num(sx) << "\" y=\"" << num(MT + ph + 16) << "\" text-anchor=\"middle\">"
          << tick_label(fx, spec.logx) << "</text>\n";
        o << "<text x=\"" << num(ML - 6) << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
          << tick_label(fy, spec.logy) << "</text>\n";
    }
    o << "<text x=\"" << num(ML + pw / 2) << "\" y=\"" << num(Hh - 14) << "\" text-anchor=\"middle\">" << escape(spec.xlabel) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(MT + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(MT + ph / 2) << ")\">" << escape(spec.ylabel) << "</text>\n";
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* col = palette[k % 8];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            o << (first ? "" : " ") << num(px(s.x[i])) << "," << num(py(s.y[i]));
            first = false;
        }
        o << "\"/>\n";
        double ly = MT + 14 + 18 * static_cast<double>(k);
        o << "<line x1=\"" << num(W - MR + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(W - MR + 30) << "\" y2=\""
          << num(ly - 4) << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(W - MR + 34) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg(const std::string& path, const PlotSpec& spec) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write plot: " + path);
    out << render_svg(spec);
    if (!out) throw std::runtime_error("plot write failed: " + path);
}

}  // namespace qn
