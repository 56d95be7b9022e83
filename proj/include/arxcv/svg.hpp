#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arxcv {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

// plain comma separated, no quoting (our own writers never quote)
CsvTable read_csv(std::istream& is);

enum class PlotKind { Line, Scatter };
PlotKind parse_plot_kind(const std::string& s);

struct PlotSpec {
    PlotKind kind = PlotKind::Line;
    std::string x, y;       // empty: first two numeric columns
    std::string series;     // line plots: one polyline per distinct value
    std::string title;
};

// Minimal SVG. Line: one polyline per series, points in x order.
// Scatter: circles, the x<0 and y<0 regions shaded, quadrant counts in the legend.
// Rows whose x or y does not parse are skipped; no rows leaves just the axes.
std::string render_svg(const CsvTable& csv, const PlotSpec& spec);

} // namespace arxcv
