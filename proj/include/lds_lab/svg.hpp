#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lds {

struct ChartSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  ///< (x, y); y ≤ 0 or non-finite is drawn on the floor
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
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

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// Line chart with a log10 y axis, one <polyline> per series.
inline std::string render_log_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                    const std::vector<ChartSeries>& series) {
    constexpr double width = 720, height = 460, left = 80, right = 150, top = 40, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            if (std::isfinite(y) && y > 0) {
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
    if (x_max == x_min) x_max = x_min + 1;
    if (!std::isfinite(y_min)) y_min = 1, y_max = 10;
    double lo = std::floor(std::log10(y_min)) - 1;  // one decade of headroom holds the floor
    double hi = std::ceil(std::log10(y_max));
    if (hi <= lo) hi = lo + 1;

    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) {
        const double ly = (std::isfinite(y) && y > 0) ? std::clamp(std::log10(y), lo, hi) : lo;
        return top + (hi - ly) / (hi - lo) * plot_h;
    };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"460\" viewBox=\"0 0 720 460\">\n";
    svg += "<rect width=\"720\" height=\"460\" fill=\"white\"/>\n";
    svg += "<text x=\"" + detail::num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           detail::xml_escape(title) + "</text>\n";
    svg += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(top) + "\" width=\"" + detail::num(plot_w) +
           "\" height=\"" + detail::num(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
        const double y = top + (hi - e) / (hi - lo) * plot_h;
        svg += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(y) + "\" x2=\"" + detail::num(left + plot_w) +
               "\" y2=\"" + detail::num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(y + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">1e" + std::to_string(e) + "</text>\n";
    }
    std::vector<double> xs;
    for (const auto& s : series)
        for (auto [x, y] : s.points) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) {
        char label[32];
        std::snprintf(label, sizeof label, "%g", x);
        svg += "<text x=\"" + detail::num(px(x)) + "\" y=\"" + detail::num(top + plot_h + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + label + "</text>\n";
    }
    svg += "<text x=\"" + detail::num(left + plot_w / 2) + "\" y=\"" + detail::num(height - 16) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + detail::xml_escape(x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + detail::num(top + plot_h / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
           detail::num(top + plot_h / 2) + ")\">" + detail::xml_escape(y_label) + " (log scale)</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = palette[i % std::size(palette)];
        std::string pts;
        for (auto [x, y] : s.points) {
            if (!pts.empty()) pts += ' ';
            pts += detail::num(px(x)) + "," + detail::num(py(y));
        }
        svg += "<polyline data-series=\"" + detail::xml_escape(s.label) + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(i);
        svg += "<line x1=\"" + detail::num(left + plot_w + 12) + "\" y1=\"" + detail::num(ly) + "\" x2=\"" +
               detail::num(left + plot_w + 32) + "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + detail::num(left + plot_w + 38) + "\" y=\"" + detail::num(ly + 4) + "\" font-size=\"12\">" +
               detail::xml_escape(s.label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace lds
