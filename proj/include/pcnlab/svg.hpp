#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace pcnlab {

// Hand-rolled SVG emitters for the report charts. Output is plain text
// built with fixed-precision formatting, so identical inputs produce
// identical bytes.

namespace svgdetail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b",
                                    "#17becf", "#7f7f7f"};
    return kColors[i % 8];
}

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, y0, x1, y1;      // plot rectangle in pixels
    double xmin, xmax, ymin, ymax;

    double px(double x) const {
        return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    }
    double py(double y) const {
        return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0);
    }
};

inline void axes(std::ostringstream& os, const Frame& f,
                 const std::string& x_label, const std::string& y_label) {
    os << "<line x1='" << num(f.x0) << "' y1='" << num(f.y1) << "' x2='"
       << num(f.x1) << "' y2='" << num(f.y1)
       << "' stroke='#333' stroke-width='1'/>\n";
    os << "<line x1='" << num(f.x0) << "' y1='" << num(f.y0) << "' x2='"
       << num(f.x0) << "' y2='" << num(f.y1)
       << "' stroke='#333' stroke-width='1'/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double fx = f.xmin + (f.xmax - f.xmin) * t / 5.0;
        const double fy = f.ymin + (f.ymax - f.ymin) * t / 5.0;
        os << "<text x='" << num(f.px(fx)) << "' y='" << num(f.y1 + 16)
           << "' font-size='10' text-anchor='middle'>" << num(fx)
           << "</text>\n";
        os << "<text x='" << num(f.x0 - 6) << "' y='" << num(f.py(fy) + 3)
           << "' font-size='10' text-anchor='end'>" << num(fy) << "</text>\n";
        os << "<line x1='" << num(f.x0) << "' y1='" << num(f.py(fy))
           << "' x2='" << num(f.x1) << "' y2='" << num(f.py(fy))
           << "' stroke='#ddd' stroke-width='0.5'/>\n";
    }
    os << "<text x='" << num((f.x0 + f.x1) / 2) << "' y='" << num(f.y1 + 32)
       << "' font-size='12' text-anchor='middle'>" << escape(x_label)
       << "</text>\n";
    os << "<text x='14' y='" << num((f.y0 + f.y1) / 2)
       << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 "
       << num((f.y0 + f.y1) / 2) << ")'>" << escape(y_label) << "</text>\n";
}

}  // namespace svgdetail

struct ChartSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

inline std::string line_chart_svg(const std::string& title,
                                  const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<ChartSeries>& series,
                                  bool log_x = false) {
    using namespace svgdetail;
    const double width = 680, height = 440;
    Frame f{64, 48, width - 24, height - 56, 0, 1, 0, 1};

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = 0.0, ymax = -std::numeric_limits<double>::infinity();
    for (const ChartSeries& s : series) {
        for (double x : s.xs) {
            const double v = log_x ? std::log10(x) : x;
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double y : s.ys) ymax = std::max(ymax, y);
    }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
    }
    if (!std::isfinite(ymax) || ymax <= ymin) ymax = ymin + 1;
    if (xmax <= xmin) xmax = xmin + 1;
    ymax *= 1.05;
    f.xmin = xmin;
    f.xmax = xmax;
    f.ymin = ymin;
    f.ymax = ymax;

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
       << "' height='" << height << "' viewBox='0 0 " << width << ' ' << height
       << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << num(width / 2)
       << "' y='24' font-size='14' text-anchor='middle' font-weight='bold'>"
       << escape(title) << "</text>\n";
    axes(os, f, log_x ? x_label + " (log10)" : x_label, y_label);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const ChartSeries& s = series[i];
        os << "<polyline fill='none' stroke='" << palette(i)
           << "' stroke-width='1.6' points='";
        for (std::size_t p = 0; p < s.xs.size(); ++p) {
            const double x = log_x ? std::log10(s.xs[p]) : s.xs[p];
            os << num(f.px(x)) << ',' << num(f.py(s.ys[p])) << ' ';
        }
        os << "'/>\n";
        for (std::size_t p = 0; p < s.xs.size(); ++p) {
            const double x = log_x ? std::log10(s.xs[p]) : s.xs[p];
            os << "<circle cx='" << num(f.px(x)) << "' cy='"
               << num(f.py(s.ys[p])) << "' r='2.4' fill='" << palette(i)
               << "'/>\n";
        }
        const double ly = 40.0 + 14.0 * static_cast<double>(i);
        os << "<rect x='" << num(f.x1 - 150) << "' y='" << num(ly - 8)
           << "' width='10' height='10' fill='" << palette(i) << "'/>\n";
        os << "<text x='" << num(f.x1 - 136) << "' y='" << num(ly)
           << "' font-size='10'>" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// Grouped bars: one cluster per group, one bar per series within it.
inline std::string grouped_bar_svg(const std::string& title,
                                   const std::string& x_label,
                                   const std::string& y_label,
                                   const std::vector<std::string>& groups,
                                   const std::vector<std::string>& series,
                                   const std::vector<std::vector<double>>&
                                       values /* [group][series] */) {
    using namespace svgdetail;
    const double width = 680, height = 440;
    Frame f{64, 48, width - 24, height - 56, 0, 1, 0, 1};
    double ymax = 0.0;
    for (const auto& row : values)
        for (double v : row) ymax = std::max(ymax, v);
    if (ymax <= 0) ymax = 1;
    f.ymin = 0;
    f.ymax = ymax * 1.05;
    f.xmin = 0;
    f.xmax = 1;

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
       << "' height='" << height << "' viewBox='0 0 " << width << ' ' << height
       << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << num(width / 2)
       << "' y='24' font-size='14' text-anchor='middle' font-weight='bold'>"
       << escape(title) << "</text>\n";

    os << "<line x1='" << num(f.x0) << "' y1='" << num(f.y1) << "' x2='"
       << num(f.x1) << "' y2='" << num(f.y1) << "' stroke='#333'/>\n";
    os << "<line x1='" << num(f.x0) << "' y1='" << num(f.y0) << "' x2='"
       << num(f.x0) << "' y2='" << num(f.y1) << "' stroke='#333'/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double fy = f.ymin + (f.ymax - f.ymin) * t / 5.0;
        os << "<text x='" << num(f.x0 - 6) << "' y='" << num(f.py(fy) + 3)
           << "' font-size='10' text-anchor='end'>" << num(fy) << "</text>\n";
        os << "<line x1='" << num(f.x0) << "' y1='" << num(f.py(fy))
           << "' x2='" << num(f.x1) << "' y2='" << num(f.py(fy))
           << "' stroke='#ddd' stroke-width='0.5'/>\n";
    }
    os << "<text x='" << num((f.x0 + f.x1) / 2) << "' y='" << num(f.y1 + 32)
       << "' font-size='12' text-anchor='middle'>" << escape(x_label)
       << "</text>\n";
    os << "<text x='14' y='" << num((f.y0 + f.y1) / 2)
       << "' font-size='12' text-anchor='middle' transform='rotate(-90 14 "
       << num((f.y0 + f.y1) / 2) << ")'>" << escape(y_label) << "</text>\n";

    const double plot_w = f.x1 - f.x0;
    const double group_w = plot_w / static_cast<double>(groups.size());
    const double bar_w =
        group_w * 0.8 / static_cast<double>(std::max<std::size_t>(1, series.size()));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const double gx = f.x0 + group_w * (static_cast<double>(gi) + 0.1);
        for (std::size_t si = 0; si < series.size(); ++si) {
            const double v = values[gi][si];
            const double bx = gx + bar_w * static_cast<double>(si);
            const double by = f.py(v);
            os << "<rect x='" << num(bx) << "' y='" << num(by) << "' width='"
               << num(bar_w * 0.92) << "' height='" << num(f.y1 - by)
               << "' fill='" << palette(si) << "'/>\n";
        }
        os << "<text x='" << num(gx + group_w * 0.4) << "' y='"
           << num(f.y1 + 16) << "' font-size='10' text-anchor='middle'>"
           << escape(groups[gi]) << "</text>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = 40.0 + 14.0 * static_cast<double>(si);
        os << "<rect x='" << num(f.x1 - 150) << "' y='" << num(ly - 8)
           << "' width='10' height='10' fill='" << palette(si) << "'/>\n";
        os << "<text x='" << num(f.x1 - 136) << "' y='" << num(ly)
           << "' font-size='10'>" << escape(series[si]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace pcnlab
