#include "arxcv/svg.hpp"
#include "arxcv/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

namespace arxcv {

namespace {

constexpr double kW = 640, kH = 420;
constexpr double kLeft = 60, kRight = 170, kTop = 30, kBottom = 40; // legend sits on the right

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> number(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        case '"': o += "&quot;"; break;
        default: o += c;
        }
    }
    return o;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

struct Range {
    double lo = 0.0, hi = 1.0;
    void fit(const std::vector<double>& v, bool include_zero) {
        if (v.empty()) return;
        lo = *std::min_element(v.begin(), v.end());
        hi = *std::max_element(v.begin(), v.end());
        if (include_zero) {
            lo = std::min(lo, 0.0);
            hi = std::max(hi, 0.0);
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        } else {
            const double pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
    }
};

struct Frame {
    Range xr, yr;
    double px(double x) const { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kW - kLeft - kRight); }
    double py(double y) const { return kH - kBottom - (y - yr.lo) / (yr.hi - yr.lo) * (kH - kTop - kBottom); }
};

void axes(std::ostream& os, const Frame& f, const std::string& xl, const std::string& yl) {
    const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
    os << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n";
    os << "</g>\n<g font-size=\"10\" font-family=\"sans-serif\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.xr.lo + i * (f.xr.hi - f.xr.lo) / 4, yv = f.yr.lo + i * (f.yr.hi - f.yr.lo) / 4;
        os << "<text x=\"" << fmt(f.px(xv)) << "\" y=\"" << y0 + 14 << "\" text-anchor=\"middle\">" << fmt(xv)
           << "</text>\n";
        os << "<text x=\"" << x0 - 4 << "\" y=\"" << fmt(f.py(yv) + 3) << "\" text-anchor=\"end\">" << fmt(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 6 << "\" text-anchor=\"middle\">" << escape(xl)
       << "</text>\n";
    os << "<text x=\"14\" y=\"" << (y0 + y1) / 2 << "\" transform=\"rotate(-90 14 " << (y0 + y1) / 2
       << ")\" text-anchor=\"middle\">" << escape(yl) << "</text>\n</g>\n";
}

void legend(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& items) {
    os << "<g class=\"legend\" font-size=\"11\" font-family=\"sans-serif\">\n";
    double y = kTop + 10;
    for (const auto& [color, label] : items) {
        if (!color.empty())
            os << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\""
               << color << "\"/>\n";
        os << "<text x=\"" << kW - kRight + 26 << "\" y=\"" << y << "\">" << escape(label) << "</text>\n";
        y += 16;
    }
    os << "</g>\n";
}

} // namespace

int CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            t.header = split(line);
            first = false;
        } else {
            t.rows.push_back(split(line));
        }
    }
    return t;
}

PlotKind parse_plot_kind(const std::string& s) {
    if (s == "line") return PlotKind::Line;
    if (s == "scatter") return PlotKind::Scatter;
    throw ConfigError("unknown plot kind: " + s);
}

std::string render_svg(const CsvTable& csv, const PlotSpec& spec) {
    // pick columns
    int xc = spec.x.empty() ? -1 : csv.column(spec.x);
    int yc = spec.y.empty() ? -1 : csv.column(spec.y);
    if (!spec.x.empty() && xc < 0 && !csv.header.empty()) throw ConfigError("no column named " + spec.x);
    if (!spec.y.empty() && yc < 0 && !csv.header.empty()) throw ConfigError("no column named " + spec.y);
    const int sc = spec.series.empty() ? -1 : csv.column(spec.series);
    if (!spec.series.empty() && sc < 0 && !csv.header.empty()) throw ConfigError("no column named " + spec.series);
    if ((xc < 0 || yc < 0) && !csv.rows.empty()) {
        std::vector<int> numeric;
        for (int j = 0; j < static_cast<int>(csv.header.size()); ++j)
            if (number(csv.rows.front().size() > static_cast<std::size_t>(j) ? csv.rows.front()[j] : ""))
                numeric.push_back(j);
        if (xc < 0 && !numeric.empty()) xc = numeric[0];
        if (yc < 0) {
            for (int j : numeric)
                if (j != xc) {
                    yc = j;
                    break;
                }
        }
    }
    const std::string xl = xc >= 0 ? csv.header[xc] : spec.x;
    const std::string yl = yc >= 0 ? csv.header[yc] : spec.y;

    // points, grouped by series in order of first appearance
    std::vector<std::string> names;
    std::map<std::string, std::vector<std::pair<double, double>>> groups;
    std::vector<double> xs, ys;
    if (xc >= 0 && yc >= 0) {
        for (const auto& r : csv.rows) {
            if (static_cast<int>(r.size()) <= std::max(xc, yc)) continue;
            const auto x = number(r[xc]), y = number(r[yc]);
            if (!x || !y) continue;
            const std::string key = sc >= 0 && sc < static_cast<int>(r.size()) ? r[sc] : "";
            if (!groups.count(key)) names.push_back(key);
            groups[key].emplace_back(*x, *y);
            xs.push_back(*x);
            ys.push_back(*y);
        }
    }

    const bool scatter = spec.kind == PlotKind::Scatter;
    Frame f;
    f.xr.fit(xs, scatter);
    f.yr.fit(ys, scatter);

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
       << kW << ' ' << kH << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!spec.title.empty())
        os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
           << escape(spec.title) << "</text>\n";

    std::vector<std::pair<std::string, std::string>> items;
    if (scatter && !xs.empty()) {
        // a point left of or below zero is an adverse selection on that axis
        const double zx = f.px(0.0), zy = f.py(0.0);
        const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
        os << "<g class=\"adverse\" fill=\"#d62728\" fill-opacity=\"0.08\">\n";
        os << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y1) << "\" width=\"" << fmt(zx - x0) << "\" height=\""
           << fmt(y0 - y1) << "\"/>\n";
        os << "<rect x=\"" << fmt(zx) << "\" y=\"" << fmt(zy) << "\" width=\"" << fmt(x1 - zx) << "\" height=\""
           << fmt(y0 - zy) << "\"/>\n";
        os << "</g>\n";
        os << "<g stroke=\"gray\" stroke-dasharray=\"3,3\">\n";
        os << "<line x1=\"" << fmt(zx) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(zx) << "\" y2=\"" << fmt(y1)
           << "\"/>\n";
        os << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(zy) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(zy)
           << "\"/>\n</g>\n";
        int q[4] = {0, 0, 0, 0}; // ++ -+ -- +-
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const bool px = xs[i] >= 0.0, py = ys[i] >= 0.0;
            ++q[px ? (py ? 0 : 3) : (py ? 1 : 2)];
        }
        items.push_back({"", "x+ y+: " + std::to_string(q[0])});
        items.push_back({"", "x- y+: " + std::to_string(q[1])});
        items.push_back({"", "x- y-: " + std::to_string(q[2])});
        items.push_back({"", "x+ y-: " + std::to_string(q[3])});
    }

    axes(os, f, xl, yl);

    for (std::size_t g = 0; g < names.size(); ++g) {
        const char* color = kColors[g % (sizeof(kColors) / sizeof(kColors[0]))];
        auto pts = groups[names[g]];
        if (scatter) {
            os << "<g fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
            for (const auto& [x, y] : pts)
                os << "<circle cx=\"" << fmt(f.px(x)) << "\" cy=\"" << fmt(f.py(y)) << "\" r=\"2.5\"/>\n";
            os << "</g>\n";
        } else {
            std::stable_sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i)
                os << (i ? " " : "") << fmt(f.px(pts[i].first)) << ',' << fmt(f.py(pts[i].second));
            os << "\"/>\n";
        }
        if (!names[g].empty() || names.size() > 1) items.insert(items.begin() + g, {color, names[g]});
    }
    if (!items.empty()) legend(os, items);
    os << "</svg>\n";
    return os.str();
}

} // namespace arxcv
