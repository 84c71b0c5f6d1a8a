#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "vancorisk/common.hpp"

// Minimal standalone SVG plots: enough for ROC curves, ALE lines, ablation
// bars, SHAP beeswarms and posterior histograms. No external renderer.

namespace vancorisk::svg {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

class Canvas {
public:
    Canvas(int width, int height) : width_(width), height_(height) {
        body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                 std::to_string(width) + "\" height=\"" + std::to_string(height) +
                 "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                 std::to_string(height) + "\">\n";
        body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double w = 1.0, const std::string& dash = "") {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                 "\" y2=\"" + num(y2) + "\" stroke=\"" + color + "\" stroke-width=\"" +
                 num(w) + "\"";
        if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
        body_ += "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double w = 1.5) {
        body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
                 num(w) + "\" points=\"";
        for (const auto& [x, y] : pts) body_ += num(x) + "," + num(y) + " ";
        body_ += "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill,
                double opacity = 1.0) {
        body_ += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) +
                 "\" fill=\"" + fill + "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
                 "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 11,
              const std::string& anchor = "start", const std::string& color = "#333") {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
                 std::to_string(size) +
                 "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
                 "\" fill=\"" + color + "\">" + s + "</text>\n";
    }

    std::string finish() { return body_ + "</svg>\n"; }

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_, height_;
    std::string body_;
};

inline const std::vector<std::string>& palette() {
    static const std::vector<std::string> colors = {
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return colors;
}

// axis frame with ticks; returns origin and pixel scales through out-params
inline void draw_frame(Canvas& canvas, double xmin, double xmax, double ymin,
                       double ymax, const std::string& xlabel,
                       const std::string& ylabel, const std::string& title,
                       double& ox, double& oy, double& sx, double& sy) {
    const double left = 55, right = 15, top = 28, bottom = 40;
    const double w = canvas.width() - left - right;
    const double h = canvas.height() - top - bottom;
    ox = left;
    oy = top + h;
    sx = w / (xmax - xmin);
    sy = h / (ymax - ymin);

    canvas.line(left, top, left, top + h, "#333");
    canvas.line(left, top + h, left + w, top + h, "#333");
    for (int t = 0; t <= 4; ++t) {
        const double fx = xmin + (xmax - xmin) * t / 4.0;
        const double fy = ymin + (ymax - ymin) * t / 4.0;
        const double px = left + (fx - xmin) * sx;
        const double py = top + h - (fy - ymin) * sy;
        canvas.line(px, top + h, px, top + h + 4, "#333");
        canvas.text(px, top + h + 16, num(fx), 10, "middle");
        canvas.line(left - 4, py, left, py, "#333");
        canvas.text(left - 6, py + 3, num(fy), 10, "end");
    }
    canvas.text(left + w / 2, canvas.height() - 8, xlabel, 11, "middle");
    canvas.text(14, top - 10, ylabel, 11, "start");
    canvas.text(left + w / 2, 16, title, 12, "middle");
}

inline std::string line_chart(const std::vector<Series>& series,
                              const std::string& xlabel, const std::string& ylabel,
                              const std::string& title, bool diagonal = false) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin >= xmax) xmax = xmin + 1;
    if (ymin >= ymax) ymax = ymin + 1;

    Canvas canvas(560, 420);
    double ox, oy, sx, sy;
    draw_frame(canvas, xmin, xmax, ymin, ymax, xlabel, ylabel, title, ox, oy, sx, sy);
    if (diagonal)
        canvas.line(ox + (xmin - xmin) * sx, oy - (xmin - ymin) * sy,
                    ox + (xmax - xmin) * sx, oy - (xmax - ymin) * sy, "#bbb", 1.0,
                    "4 3");
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [x, y] : series[i].points)
            pts.push_back({ox + (x - xmin) * sx, oy - (y - ymin) * sy});
        const auto& color = palette()[i % palette().size()];
        canvas.polyline(pts, color);
        canvas.text(ox + 10, 38 + 14 * static_cast<double>(i), series[i].label, 10,
                    "start", color);
    }
    return canvas.finish();
}

inline std::string bar_chart(const std::vector<std::pair<std::string, double>>& bars,
                             const std::string& xlabel, const std::string& title,
                             double reference_line = kMissing) {
    const int row_height = 18;
    Canvas canvas(640, 70 + row_height * static_cast<int>(bars.size()));
    double vmin = 0.0, vmax = 0.0;
    for (const auto& [_, v] : bars) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (!is_missing(reference_line)) {
        vmin = std::min(vmin, reference_line);
        vmax = std::max(vmax, reference_line);
    }
    if (vmax == vmin) vmax = vmin + 1;
    const double left = 190, right = 20, top = 34;
    const double w = canvas.width() - left - right;
    auto px = [&](double v) { return left + (v - vmin) / (vmax - vmin) * w; };

    canvas.text(canvas.width() / 2.0, 16, title, 12, "middle");
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const double y = top + row_height * static_cast<double>(i);
        const auto& [name, v] = bars[i];
        canvas.text(left - 6, y + 12, name, 10, "end");
        const double x0 = px(std::min(0.0, v)), x1 = px(std::max(0.0, v));
        canvas.rect(x0, y + 3, std::max(1.0, x1 - x0), row_height - 6,
                    v >= 0 ? "#1f77b4" : "#d62728");
    }
    if (!is_missing(reference_line))
        canvas.line(px(reference_line), top - 6,
                    px(reference_line), top + row_height * bars.size(), "#d62728",
                    1.0, "4 3");
    canvas.text(left + w / 2, canvas.height() - 10, xlabel, 11, "middle");
    return canvas.finish();
}

// SHAP beeswarm: one band per feature, x = phi, color = feature value
// percentile (blue low, red high).
inline std::string beeswarm(const std::vector<std::string>& feature_names,
                            const std::vector<std::size_t>& ranking,
                            const std::vector<std::vector<double>>& phi_matrix,
                            const std::vector<std::vector<double>>& value_matrix,
                            std::size_t top_k, const std::string& title) {
    const std::size_t k = std::min(top_k, ranking.size());
    const int row_height = 26;
    Canvas canvas(680, 70 + row_height * static_cast<int>(k));

    double pmax = 1e-12;
    for (const auto& row : phi_matrix)
        for (std::size_t r = 0; r < k; ++r)
            pmax = std::max(pmax, std::fabs(row[ranking[r]]));

    const double left = 190, right = 30, top = 40;
    const double w = canvas.width() - left - right;
    auto px = [&](double v) { return left + (v + pmax) / (2 * pmax) * w; };

    canvas.text(canvas.width() / 2.0, 16, title, 12, "middle");
    canvas.line(px(0), top - 8, px(0), top + row_height * k, "#999", 1.0, "3 3");
    canvas.text(px(0), canvas.height() - 10, "phi (log-odds)", 11, "middle");

    // per-feature value percentiles for coloring
    for (std::size_t r = 0; r < k; ++r) {
        const std::size_t j = ranking[r];
        const double yc = top + row_height * (static_cast<double>(r) + 0.5);
        canvas.text(left - 6, yc + 3, feature_names[j], 10, "end");

        std::vector<double> vals;
        vals.reserve(value_matrix.size());
        for (const auto& row : value_matrix) vals.push_back(row[j]);
        auto sorted = vals;
        std::sort(sorted.begin(), sorted.end());
        Rng jitter(13 + j);
        for (std::size_t i = 0; i < phi_matrix.size(); ++i) {
            const double q =
                static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(),
                                                     value_matrix[i][j]) -
                                    sorted.begin()) /
                std::max<std::size_t>(1, sorted.size() - 1);
            const int red = static_cast<int>(30 + 195 * q);
            const int blue = static_cast<int>(225 - 195 * q);
            char color[16];
            std::snprintf(color, sizeof(color), "#%02x30%02x", red, blue);
            const double y = yc + 8.0 * (jitter.uniform() - 0.5);
            canvas.circle(px(phi_matrix[i][ranking[r]]), y, 1.6, color, 0.7);
        }
    }
    return canvas.finish();
}

inline std::string histogram(const std::vector<double>& edges,
                             const std::vector<std::size_t>& counts,
                             const std::string& xlabel, const std::string& title,
                             double mean_marker = kMissing) {
    Canvas canvas(560, 380);
    std::size_t cmax = 1;
    for (auto c : counts) cmax = std::max(cmax, c);
    double ox, oy, sx, sy;
    draw_frame(canvas, edges.front(), edges.back(), 0.0, static_cast<double>(cmax),
               xlabel, "count", title, ox, oy, sx, sy);
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double x = ox + (edges[b] - edges.front()) * sx;
        const double w = (edges[b + 1] - edges[b]) * sx;
        const double h = static_cast<double>(counts[b]) * sy;
        canvas.rect(x, oy - h, std::max(1.0, w - 1.0), h, "#1f77b4");
    }
    if (!is_missing(mean_marker))
        canvas.line(ox + (mean_marker - edges.front()) * sx, oy,
                    ox + (mean_marker - edges.front()) * sx, oy - cmax * sy,
                    "#d62728", 1.5, "5 3");
    return canvas.finish();
}

}  // namespace vancorisk::svg
