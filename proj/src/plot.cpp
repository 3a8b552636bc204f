#include "borat/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace borat {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;
constexpr double kLogFloor = 1e-16;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string header_value(const RunTrace& trace, const std::string& key) {
    for (const auto& [k, v] : trace.header) {
        if (k == key) {
            return v;
        }
    }
    return {};
}

// Blue (low) to yellow (high).
std::string shade(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(40 + t * (250 - 40)));
    const int g = static_cast<int>(std::lround(60 + t * (230 - 60)));
    const int b = static_cast<int>(std::lround(160 + t * (40 - 160)));
    std::ostringstream os;
    os << "rgb(" << r << ',' << g << ',' << b << ')';
    return os.str();
}

} // namespace

std::string trace_svg(const RunTrace& trace) {
    std::vector<std::pair<double, double>> pts;
    std::string label = "full objective";
    for (const auto& r : trace.records) {
        if (r.full_obj) {
            pts.emplace_back(static_cast<double>(r.step), *r.full_obj);
        }
    }
    if (pts.empty()) {
        label = "sampled loss";
        for (const auto& r : trace.records) {
            if (r.sampled_loss) {
                pts.emplace_back(static_cast<double>(r.step), *r.sampled_loss);
            }
        }
    }
    if (pts.empty()) {
        throw InvalidInput("trace has no objective values to plot");
    }
    for (auto& p : pts) {
        if (!std::isfinite(p.second)) {
            throw InvalidInput("trace contains non-finite objective values");
        }
        p.second = std::log10(std::max(p.second, kLogFloor));
    }
    double xmin = pts.front().first;
    double xmax = pts.back().first;
    double ymin = pts.front().second;
    double ymax = ymin;
    for (const auto& p : pts) {
        ymin = std::min(ymin, p.second);
        ymax = std::max(ymax, p.second);
    }
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax <= ymin) {
        ymax = ymin + 1.0;
    }
    if (xmax <= xmin) {
        xmax = xmin + 1.0;
    }
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string title = header_value(trace, "problem") + " " + header_value(trace, "optimizer") + " N=" +
                              std::to_string(trace.bundle_size) + " eta=" + header_value(trace, "eta");
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape(title) << "</text>\n";

    const int decades = static_cast<int>(ymax - ymin);
    const int stride = std::max(1, decades / 8);
    for (int k = 0; k <= decades; k += stride) {
        const double y = ymin + k;
        svg << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << sy(y) << "\" y2=\"" << sy(y)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">1e" << y
            << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double x = xmin + (xmax - xmin) * k / 4.0;
        svg << "<text x=\"" << sx(x) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
            << fmt(std::round(x)) << "</text>\n";
    }
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">step</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << kTop + ph / 2 << ")\">" << label << " (log10)</text>\n";
    svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts) {
        svg << fmt(sx(p.first)) << ',' << fmt(sy(p.second)) << ' ';
    }
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

std::string grid_svg(const SweepGrid& grid) {
    if (grid.etas.empty() || grid.rs.empty()) {
        throw InvalidInput("grid has no cells to plot");
    }
    const bool log_scale = grid.metric == SweepMetric::final_objective;
    auto key = [&](double v) { return log_scale ? std::log10(std::max(v, kLogFloor)) : v; };
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& row : grid.values) {
        for (double v : row) {
            if (std::isfinite(v)) {
                lo = std::min(lo, key(v));
                hi = std::max(hi, key(v));
            }
        }
    }
    const double cell = 80.0;
    const double left = 80.0;
    const double top = 40.0;
    const double width = left + cell * static_cast<double>(grid.etas.size()) + 20.0;
    const double height = top + cell * static_cast<double>(grid.rs.size()) + 50.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << to_string(grid.metric)
        << "</text>\n";
    for (std::size_t i = 0; i < grid.rs.size(); ++i) {
        const double y = top + cell * static_cast<double>(i);
        svg << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">r="
            << (std::isinf(grid.rs[i]) ? std::string("none") : fmt(grid.rs[i])) << "</text>\n";
        for (std::size_t j = 0; j < grid.etas.size(); ++j) {
            const double x = left + cell * static_cast<double>(j);
            const double v = grid.values[i][j];
            std::string fill = "#bbb";
            if (std::isfinite(v)) {
                fill = shade(hi > lo ? (key(v) - lo) / (hi - lo) : 0.5);
            }
            svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
            svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">"
                << (std::isnan(v) ? std::string("nan") : fmt(v)) << "</text>\n";
        }
    }
    const double yb = top + cell * static_cast<double>(grid.rs.size());
    for (std::size_t j = 0; j < grid.etas.size(); ++j) {
        svg << "<text x=\"" << left + cell * (static_cast<double>(j) + 0.5) << "\" y=\"" << yb + 16
            << "\" text-anchor=\"middle\">eta=" << fmt(grid.etas[j]) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void plot_file(const std::filesystem::path& input, const std::filesystem::path& output) {
    std::ifstream in(input);
    if (!in) {
        throw InvalidInput("cannot open " + input.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const std::string svg = text.rfind("# kind=sweep_grid", 0) == 0 ? grid_svg(parse_grid(text))
                                                                     : trace_svg(parse_trace(text));
    if (output.has_parent_path()) {
        std::filesystem::create_directories(output.parent_path());
    }
    std::ofstream out(output);
    if (!out) {
        throw InvalidInput("cannot open " + output.string() + " for writing");
    }
    out << svg;
}

} // namespace borat
