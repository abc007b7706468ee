// Hinton-diagram SVG emission: a grid of white squares on a dark field,
// square side proportional to sqrt(value / max value) so area tracks the
// coefficient. Rows and columns carry hierarchical group labels derived
// from the tuple spaces. Output is deterministic (no timestamps).
#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "strudel/error.hpp"
#include "strudel/linalg.hpp"
#include "strudel/schema.hpp"

namespace strudel {

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct LabelRun {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
};

// Contiguous runs of tuples sharing the prefix up to `level` (inclusive).
inline std::vector<LabelRun> label_runs(const std::vector<Tuple>& tuples, std::size_t level) {
    std::vector<LabelRun> runs;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        const bool fresh = runs.empty() ||
                           !std::equal(tuples[i].begin(), tuples[i].begin() + static_cast<long>(level) + 1,
                                       tuples[runs.back().begin].begin());
        if (fresh)
            runs.push_back({tuples[i][level], i, i + 1});
        else
            runs.back().end = i + 1;
    }
    return runs;
}

}  // namespace detail

inline std::string hinton_svg(const Matrix& m, const std::vector<Tuple>& row_tuples,
                              const std::vector<Tuple>& col_tuples, const std::string& title) {
    if (m.rows() != row_tuples.size() || m.cols() != col_tuples.size())
        throw SpecError("hinton: label counts do not match the matrix");
    double max_v = 0.0;
    for (double v : m.data()) {
        if (v < 0.0) throw SpecError("hinton: values must be non-negative");
        max_v = std::max(max_v, v);
    }
    const double cell = 26.0;
    const std::size_t levels = row_tuples.empty() ? 0 : row_tuples.front().size();
    const double band = 18.0;
    const double left = 10.0 + band * static_cast<double>(levels) + 60.0;
    const double top = 30.0 + band * static_cast<double>(col_tuples.front().size()) + 10.0;
    const double grid_w = cell * static_cast<double>(m.cols());
    const double grid_h = cell * static_cast<double>(m.rows());
    const double width = left + grid_w + 20.0;
    const double height = top + grid_h + 46.0;

    std::string svg;
    auto add = [&svg](const std::string& s) { svg += s; };
    add("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt2(width) +
        "\" height=\"" + detail::fmt2(height) + "\" viewBox=\"0 0 " + detail::fmt2(width) + " " +
        detail::fmt2(height) + "\">\n");
    add("<style>text{font-family:monospace;font-size:10px;fill:#222}.legend{font-size:9px;fill:#555}</style>\n");
    add("<text x=\"10\" y=\"16\">" + title + "</text>\n");
    add("<rect x=\"" + detail::fmt2(left) + "\" y=\"" + detail::fmt2(top) + "\" width=\"" +
        detail::fmt2(grid_w) + "\" height=\"" + detail::fmt2(grid_h) + "\" fill=\"#3a3a3a\"/>\n");

    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!(v > 0.0) || max_v <= 0.0) continue;
            const double side = cell * 0.92 * std::sqrt(v / max_v);
            const double cx = left + cell * (static_cast<double>(j) + 0.5);
            const double cy = top + cell * (static_cast<double>(i) + 0.5);
            add("<rect class=\"cell\" data-row=\"" + std::to_string(i) + "\" data-col=\"" +
                std::to_string(j) + "\" x=\"" + detail::fmt2(cx - side / 2.0) + "\" y=\"" +
                detail::fmt2(cy - side / 2.0) + "\" width=\"" + detail::fmt2(side) +
                "\" height=\"" + detail::fmt2(side) + "\" fill=\"#ffffff\"/>\n");
        }

    // column group brackets, one band per hierarchy level
    for (std::size_t lv = 0; lv < col_tuples.front().size(); ++lv) {
        const double y = 30.0 + band * static_cast<double>(lv) + 10.0;
        for (const auto& run : detail::label_runs(col_tuples, lv)) {
            const double x0 = left + cell * static_cast<double>(run.begin) + 2.0;
            const double x1 = left + cell * static_cast<double>(run.end) - 2.0;
            add("<path d=\"M" + detail::fmt2(x0) + " " + detail::fmt2(y) + " L" +
                detail::fmt2(x0) + " " + detail::fmt2(y - 4.0) + " L" + detail::fmt2(x1) + " " +
                detail::fmt2(y - 4.0) + " L" + detail::fmt2(x1) + " " + detail::fmt2(y) +
                "\" stroke=\"#666\" fill=\"none\"/>\n");
            add("<text x=\"" + detail::fmt2((x0 + x1) / 2.0) + "\" y=\"" +
                detail::fmt2(y - 6.0) + "\" text-anchor=\"middle\">" + run.text + "</text>\n");
        }
    }
    // row group brackets
    for (std::size_t lv = 0; lv < levels; ++lv) {
        const double x = 10.0 + band * static_cast<double>(lv) + 52.0;
        for (const auto& run : detail::label_runs(row_tuples, lv)) {
            const double y0 = top + cell * static_cast<double>(run.begin) + 2.0;
            const double y1 = top + cell * static_cast<double>(run.end) - 2.0;
            add("<path d=\"M" + detail::fmt2(x) + " " + detail::fmt2(y0) + " L" +
                detail::fmt2(x - 4.0) + " " + detail::fmt2(y0) + " L" + detail::fmt2(x - 4.0) +
                " " + detail::fmt2(y1) + " L" + detail::fmt2(x) + " " + detail::fmt2(y1) +
                "\" stroke=\"#666\" fill=\"none\"/>\n");
            add("<text x=\"" + detail::fmt2(x - 8.0) + "\" y=\"" +
                detail::fmt2((y0 + y1) / 2.0 + 3.0) + "\" text-anchor=\"end\">" + run.text +
                "</text>\n");
        }
    }
    add("<text class=\"legend\" x=\"10\" y=\"" + detail::fmt2(height - 12.0) +
        "\">square side = sqrt(value / max value), normalized over the whole matrix</text>\n");
    add("</svg>\n");
    return svg;
}

}  // namespace strudel
