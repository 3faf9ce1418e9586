#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gcpnn/error.hpp"

namespace gcpnn {

/// Header-indexed CSV table (no quoting; the files we write never need it).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    static CsvTable parse(const std::string& text) {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        auto split = [](const std::string& s) {
            std::vector<std::string> out;
            std::string cell;
            std::istringstream ls(s);
            while (std::getline(ls, cell, ',')) out.push_back(cell);
            if (!s.empty() && s.back() == ',') out.emplace_back();
            return out;
        };
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (t.header.empty()) t.header = split(line);
            else t.rows.push_back(split(line));
        }
        return t;
    }

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        return static_cast<std::size_t>(it - header.begin());
    }

    void require(const std::vector<std::string>& names, const std::string& kind) const {
        std::string missing;
        for (const auto& n : names)
            if (column(n) == header.size()) missing += (missing.empty() ? "" : ", ") + n;
        if (!missing.empty()) throw ArgumentError(kind + " CSV is missing column(s): " + missing);
    }

    double num(std::size_t row, const std::string& col) const { return std::stod(rows[row].at(column(col))); }
    const std::string& str(std::size_t row, const std::string& col) const { return rows[row].at(column(col)); }
};

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline const char* palette(std::size_t i) {
    static constexpr const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colours[i % 10];
}

struct Canvas {
    double w = 480, h = 360, left = 60, right = 20, top = 30, bottom = 50;
    std::ostringstream body;

    double px(double fx) const { return left + fx * (w - left - right); }
    double py(double fy) const { return h - bottom - fy * (h - top - bottom); }

    void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
        body << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const char* stroke = "#000", double width = 1) {
        body << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\"" << fmt(y2)
             << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\"/>\n";
    }
    void rect(double x, double y, double rw, double rh, const std::string& fill, const char* stroke = "none") {
        body << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(rw) << "\" height=\"" << fmt(rh)
             << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void circle(double x, double y, double r, const char* fill) {
        body << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << fmt(r) << "\" fill=\"" << fill
             << "\"/>\n";
    }
    void axes(const std::string& xlabel, const std::string& ylabel, const std::string& title) {
        line(left, h - bottom, w - right, h - bottom);
        line(left, top, left, h - bottom);
        text((left + w - right) / 2, h - 10, xlabel);
        body << "<text x=\"15\" y=\"" << fmt((top + h - bottom) / 2) << "\" font-size=\"12\" font-family=\"sans-serif\" "
             << "text-anchor=\"middle\" transform=\"rotate(-90 15 " << fmt((top + h - bottom) / 2) << ")\">" << ylabel
             << "</text>\n";
        text(w / 2, 18, title, "middle", 14);
    }
    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
            << "\" viewBox=\"0 0 " << fmt(w) << ' ' << fmt(h) << "\">\n"
            << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
            << body.str() << "</svg>\n";
        return out.str();
    }
};

}  // namespace detail

/// Acceptance curve: offset vs mean prediction, 0.5 guide line.
inline std::string plot_curve_svg(const CsvTable& t) {
    t.require({"offset", "mean_prediction"}, "curve");
    detail::Canvas cv;
    cv.axes("C - chi", "mean prediction", "Acceptance curve");
    const std::size_t n = t.rows.size();
    auto fx = [&](std::size_t i) { return cv.px(n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5); };
    cv.line(cv.px(0), cv.py(0.5), cv.px(1), cv.py(0.5), "#999");
    for (double y : {0.0, 0.5, 1.0}) cv.text(cv.left - 8, cv.py(y) + 4, detail::fmt(y), "end");
    std::ostringstream pts;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = std::clamp(t.num(i, "mean_prediction"), 0.0, 1.0);
        pts << detail::fmt(fx(i)) << ',' << detail::fmt(cv.py(y)) << ' ';
        cv.line(fx(i), cv.py(0), fx(i), cv.py(0) + 5);
        cv.text(fx(i), cv.py(0) + 18, t.str(i, "offset"));
        cv.circle(fx(i), cv.py(y), 3.5, detail::palette(0));
    }
    cv.body << "<polyline fill=\"none\" stroke=\"" << detail::palette(0) << "\" stroke-width=\"2\" points=\""
            << pts.str() << "\"/>\n";
    return cv.str();
}

/// Row-normalised heat map of predicted vs true chromatic number.
inline std::string plot_matrix_svg(const CsvTable& t) {
    t.require({"true_chi", "predicted", "count"}, "matrix");
    std::set<int> truths, preds;
    bool has_na = false;
    std::map<std::pair<int, int>, double> cell;
    std::map<int, double> row_total;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const int tc = static_cast<int>(t.num(i, "true_chi"));
        const bool na = t.str(i, "predicted") == "NA";
        const int pc = na ? -1 : static_cast<int>(t.num(i, "predicted"));
        truths.insert(tc);
        if (na) has_na = true;
        else preds.insert(pc);
        cell[{tc, pc}] += t.num(i, "count");
        row_total[tc] += t.num(i, "count");
    }
    std::vector<int> cols;
    if (!truths.empty() || !preds.empty()) {
        int lo = std::min(truths.empty() ? *preds.begin() : *truths.begin(), preds.empty() ? 1 << 30 : *preds.begin());
        int hi = std::max(truths.empty() ? *preds.rbegin() : *truths.rbegin(), preds.empty() ? -1 : *preds.rbegin());
        for (int c = lo; c <= hi; ++c) cols.push_back(c);
    }
    if (has_na) cols.push_back(-1);
    std::vector<int> rows(cols.begin(), cols.end() - (has_na ? 1 : 0));
    detail::Canvas cv;
    const double side = std::min(cv.w - cv.left - cv.right, cv.h - cv.top - cv.bottom);
    cv.w = cv.left + side + cv.right;
    const double cw = cols.empty() ? side : side / static_cast<double>(cols.size());
    const double ch = rows.empty() ? side : side / static_cast<double>(rows.size());
    cv.axes("predicted", "true chi", "Predicted vs true chromatic number");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double y = cv.top + static_cast<double>(rows.size() - 1 - r) * ch;
        cv.text(cv.left - 6, y + ch / 2 + 4, std::to_string(rows[r]), "end");
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double total = row_total.count(rows[r]) ? row_total[rows[r]] : 0.0;
            const double f = total > 0 ? (cell.count({rows[r], cols[c]}) ? cell[{rows[r], cols[c]}] : 0.0) / total : 0.0;
            const int shade = static_cast<int>(std::lround(255 * (1 - f)));
            char fill[16];
            std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
            cv.rect(cv.left + static_cast<double>(c) * cw, y, cw, ch, fill, "#ccc");
        }
    }
    for (std::size_t c = 0; c < cols.size(); ++c)
        cv.text(cv.left + (static_cast<double>(c) + 0.5) * cw, cv.h - cv.bottom + 16,
                cols[c] < 0 ? "NA" : std::to_string(cols[c]));
    return cv.str();
}

/// Box plots of `value` grouped by `group` (default: conflicts by chi).
inline std::string plot_boxes_svg(const CsvTable& t, const std::string& group = "chi",
                                  const std::string& value = "mean_conflict") {
    t.require({group, value}, "conflict");
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < t.rows.size(); ++i) groups[static_cast<int>(t.num(i, group))].push_back(t.num(i, value));
    double vmax = 0;
    for (auto& [g, v] : groups) {
        std::sort(v.begin(), v.end());
        vmax = std::max(vmax, v.back());
    }
    if (vmax <= 0) vmax = 1;
    detail::Canvas cv;
    cv.axes(group, value, "Cluster conflicts");
    auto q = [](const std::vector<double>& v, double f) {
        const double pos = f * static_cast<double>(v.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        return i + 1 < v.size() ? v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]) : v[i];
    };
    const double slot = (cv.w - cv.left - cv.right) / std::max<std::size_t>(1, groups.size());
    std::size_t k = 0;
    for (const auto& [g, v] : groups) {
        const double cx = cv.left + (static_cast<double>(k) + 0.5) * slot;
        auto y = [&](double val) { return cv.py(val / vmax); };
        const double q1 = q(v, 0.25), q2 = q(v, 0.5), q3 = q(v, 0.75);
        cv.line(cx, y(v.front()), cx, y(v.back()));
        cv.rect(cx - slot * 0.3, y(q3), slot * 0.6, std::max(0.5, y(q1) - y(q3)), detail::palette(k), "#000");
        cv.line(cx - slot * 0.3, y(q2), cx + slot * 0.3, y(q2), "#000", 2);
        cv.text(cx, cv.h - cv.bottom + 16, std::to_string(g));
        ++k;
    }
    cv.text(cv.left - 6, cv.py(1) + 4, detail::fmt(vmax), "end");
    cv.text(cv.left - 6, cv.py(0) + 4, "0", "end");
    return cv.str();
}

/// Scatter of 2-D points coloured by cluster.
inline std::string plot_scatter_svg(const CsvTable& t) {
    t.require({"x", "y", "cluster"}, "pca");
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double x = t.num(i, "x"), y = t.num(i, "y");
        if (i == 0) xmin = xmax = x, ymin = ymax = y;
        xmin = std::min(xmin, x), xmax = std::max(xmax, x), ymin = std::min(ymin, y), ymax = std::max(ymax, y);
    }
    auto span = [](double lo, double hi) { return hi > lo ? hi - lo : 1.0; };
    detail::Canvas cv;
    cv.axes("PC1", "PC2", "Vertex embeddings (PCA-2D)");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double fx = 0.05 + 0.9 * (t.num(i, "x") - xmin) / span(xmin, xmax);
        const double fy = 0.05 + 0.9 * (t.num(i, "y") - ymin) / span(ymin, ymax);
        cv.circle(cv.px(fx), cv.py(fy), 4, detail::palette(static_cast<std::size_t>(t.num(i, "cluster"))));
    }
    return cv.str();
}

/// kind: curve | matrix | conflicts | pca
inline std::string plot_svg(const std::string& kind, const std::string& csv_text) {
    const auto t = CsvTable::parse(csv_text);
    if (kind == "curve") return plot_curve_svg(t);
    if (kind == "matrix") return plot_matrix_svg(t);
    if (kind == "conflicts") return plot_boxes_svg(t);
    if (kind == "pca") return plot_scatter_svg(t);
    throw ArgumentError("unknown plot kind '" + kind + "' (curve, matrix, conflicts, pca)");
}

}  // namespace gcpnn
