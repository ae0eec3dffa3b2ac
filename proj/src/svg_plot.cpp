#include "sgdlab/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "textio.hpp"

namespace sgdlab {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 620.0, kTop = 30.0, kBottom = 430.0;
const char* const kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::string file_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return base;
}

struct Canvas {
    std::string body;

    void open() {
        body += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 480\" "
                "font-family=\"monospace\" font-size=\"12\">\n";
        body += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
    }
    std::string close() {
        body += "</svg>\n";
        return body;
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width = 1.0, const std::string& dash = "") {
        body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                num(width) + "\"";
        if (!dash.empty()) body += " stroke-dasharray=\"" + dash + "\"";
        body += "/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double width = 1.5) {
        if (pts.empty()) return;
        body += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                num(width) + "\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body += " ";
            body += num(pts[i].first) + "," + num(pts[i].second);
        }
        body += "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        body += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
                "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
                "\"/>\n";
    }
    void circle(double x, double y, double radius, const std::string& fill) {
        body += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(radius) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, const std::string& s, const std::string& anchor = "start",
              const std::string& fill = "#000000") {
        body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor +
                "\" fill=\"" + fill + "\">" + s + "</text>\n";
    }
    void frame() {
        line(kLeft, kTop, kLeft, kBottom, "#000000");
        line(kLeft, kBottom, kRight, kBottom, "#000000");
    }
    void legend(const std::vector<std::string>& labels) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double y = kTop + 14.0 + 16.0 * static_cast<double>(i);
            rect(kRight - 150.0, y - 9.0, 10.0, 10.0, kPalette[i % 6]);
            text(kRight - 135.0, y, labels[i]);
        }
    }
};

std::vector<std::string> resolve_labels(const std::vector<std::string>& csv_paths,
                                        const std::vector<std::string>& labels) {
    std::vector<std::string> out = labels;
    for (std::size_t i = out.size(); i < csv_paths.size(); ++i)
        out.push_back(file_stem(csv_paths[i]));
    out.resize(csv_paths.size());
    return out;
}

void require_inputs(const std::vector<std::string>& csv_paths, std::size_t min_count,
                    std::size_t max_count, const char* kind) {
    if (csv_paths.size() < min_count || csv_paths.size() > max_count)
        throw std::runtime_error(std::string(kind) + ": expected " +
                                 (min_count == max_count
                                      ? std::to_string(min_count)
                                      : "at least " + std::to_string(min_count)) +
                                 " CSV input(s), got " + std::to_string(csv_paths.size()));
}

// ----------------------------------------------------------------------- //

std::string render_norm_curves(const std::vector<std::string>& csv_paths,
                               const std::vector<std::string>& labels) {
    require_inputs(csv_paths, 1, 6, "norm-curves");
    struct Curve {
        std::vector<double> step, norm;
    };
    std::vector<Curve> curves;
    double max_step = 0.0, min_pos = std::numeric_limits<double>::infinity(), max_val = 0.0;
    for (const auto& path : csv_paths) {
        const textio::CsvTable table = textio::read_csv(path);
        Curve c;
        c.step = textio::column_values(table, "step", path);
        c.norm = textio::column_values(table, "irrel_norm_L1", path);
        for (double s : c.step) max_step = std::max(max_step, s);
        for (double v : c.norm)
            if (std::isfinite(v) && v > 0.0) {
                min_pos = std::min(min_pos, v);
                max_val = std::max(max_val, v);
            }
        curves.push_back(std::move(c));
    }
    const double floor_val = std::isfinite(min_pos) ? min_pos : 1e-16;
    double lo = std::log10(floor_val);
    double hi = std::log10(std::max(max_val, floor_val));
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    }
    if (max_step <= 0.0) max_step = 1.0;

    const auto sx = [&](double s) { return kLeft + (kRight - kLeft) * s / max_step; };
    const auto sy = [&](double v) {
        const double l = std::log10(std::max(v, floor_val));
        return kBottom - (kBottom - kTop) * (l - lo) / (hi - lo);
    };

    Canvas cv;
    cv.open();
    cv.frame();
    for (int t = 0; t <= 4; ++t) {
        const double frac = t / 4.0;
        const double x = kLeft + (kRight - kLeft) * frac;
        cv.line(x, kBottom, x, kBottom + 4.0, "#000000");
        cv.text(x, kBottom + 18.0, short_num(max_step * frac), "middle");
        const double y = kBottom - (kBottom - kTop) * frac;
        cv.line(kLeft - 4.0, y, kLeft, y, "#000000");
        cv.text(kLeft - 8.0, y + 4.0, "1e" + short_num(lo + (hi - lo) * frac), "end");
    }
    cv.text((kLeft + kRight) / 2.0, kBottom + 36.0, "step", "middle");
    cv.text(14.0, (kTop + kBottom) / 2.0, "&#8214;W1 irrelevant&#8214;", "middle");
    for (std::size_t i = 0; i < curves.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t t = 0; t < curves[i].step.size(); ++t)
            if (std::isfinite(curves[i].norm[t]))
                pts.emplace_back(sx(curves[i].step[t]), sy(curves[i].norm[t]));
        cv.polyline(pts, kPalette[i % 6]);
    }
    cv.legend(resolve_labels(csv_paths, labels));
    return cv.close();
}

std::string heat_color(double v, double max_abs) {
    const double t = max_abs > 0.0 ? std::clamp(std::abs(v) / max_abs, 0.0, 1.0) : 0.0;
    // white -> red for positive entries, white -> blue for negative ones
    int red, green, blue;
    if (v >= 0.0) {
        red = 255 - static_cast<int>(t * (255 - 214));
        green = 255 - static_cast<int>(t * (255 - 39));
        blue = 255 - static_cast<int>(t * (255 - 40));
    } else {
        red = 255 - static_cast<int>(t * (255 - 31));
        green = 255 - static_cast<int>(t * (255 - 119));
        blue = 255 - static_cast<int>(t * (255 - 180));
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", red, green, blue);
    return buf;
}

std::string render_gram_heatmap(const std::vector<std::string>& csv_paths,
                                const std::vector<std::string>&) {
    require_inputs(csv_paths, 1, 1, "gram-heatmap");
    const std::string& path = csv_paths[0];
    const textio::CsvTable table = textio::read_csv(path);
    const std::size_t n = table.header.size();
    if (n == 0) throw std::runtime_error("gram-heatmap: " + path + " has no columns");
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < n; ++j)
        cols.push_back(textio::column_values(table, "g" + std::to_string(j), path));
    if (table.rows.size() != n)
        throw std::runtime_error("gram-heatmap: " + path + " must be square: " +
                                 std::to_string(n) + " columns but " +
                                 std::to_string(table.rows.size()) + " rows");
    double max_abs = 0.0;
    for (const auto& col : cols)
        for (double v : col) max_abs = std::max(max_abs, std::abs(v));

    Canvas cv;
    cv.open();
    const double side = std::min(kRight - kLeft, kBottom - kTop);
    const double cell = side / static_cast<double>(n);
    const double x0 = kLeft, y0 = kTop;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cv.rect(x0 + cell * static_cast<double>(j), y0 + cell * static_cast<double>(i),
                    cell, cell, heat_color(cols[j][i], max_abs), "#dddddd");
    cv.text(x0, kBottom + 36.0, "tail-product Gram matrix, max |entry| = " +
                                    short_num(max_abs));
    for (std::size_t i = 0; i < n; ++i) {
        cv.text(x0 - 8.0, y0 + cell * (static_cast<double>(i) + 0.5) + 4.0,
                std::to_string(i), "end");
        cv.text(x0 + cell * (static_cast<double>(i) + 0.5), y0 - 8.0, std::to_string(i),
                "middle");
    }
    return cv.close();
}

std::string render_eigen_histogram(const std::vector<std::string>& csv_paths,
                                   const std::vector<std::string>&) {
    require_inputs(csv_paths, 1, 1, "eigen-histogram");
    const std::string& path = csv_paths[0];
    const textio::CsvTable table = textio::read_csv(path);
    const std::vector<double> values = textio::column_values(table, "eigenvalue", path);
    if (values.empty())
        throw std::runtime_error("eigen-histogram: " + path + " has no data rows");
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    constexpr int kBins = 10;
    std::vector<std::size_t> counts(kBins, 0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
        b = std::clamp(b, 0, kBins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const double max_count =
        static_cast<double>(*std::max_element(counts.begin(), counts.end()));

    Canvas cv;
    cv.open();
    cv.frame();
    const double bar_w = (kRight - kLeft) / kBins;
    for (int b = 0; b < kBins; ++b) {
        const double h =
            (kBottom - kTop) * static_cast<double>(counts[static_cast<std::size_t>(b)]) /
            std::max(max_count, 1.0);
        cv.rect(kLeft + bar_w * b + 1.0, kBottom - h, bar_w - 2.0, h, kPalette[0]);
    }
    cv.text(kLeft, kBottom + 18.0, short_num(lo), "middle");
    cv.text(kRight, kBottom + 18.0, short_num(hi), "middle");
    cv.text(kLeft - 8.0, kTop + 4.0, short_num(max_count), "end");
    cv.text((kLeft + kRight) / 2.0, kBottom + 36.0,
            "eigenvalue (" + std::to_string(values.size()) + " values, 10 bins)", "middle");
    return cv.close();
}

std::string render_landscape(const std::vector<std::string>& csv_paths,
                             const std::vector<std::string>& labels) {
    require_inputs(csv_paths, 1, 6, "landscape-2d");
    constexpr double kLim = 2.0;
    const auto sx = [&](double a) {
        return kLeft + (kRight - kLeft) * (a + kLim) / (2.0 * kLim);
    };
    const auto sy = [&](double b) {
        return kBottom - (kBottom - kTop) * (b + kLim) / (2.0 * kLim);
    };

    Canvas cv;
    cv.open();
    cv.frame();
    // The zero-correlation toy loss is ((a*b)^2 + 1)/2, so its level sets are
    // the hyperbolas |a*b| = const and its minima fill the two axes.
    cv.line(sx(-kLim), sy(0.0), sx(kLim), sy(0.0), "#999999", 1.0, "4,3");
    cv.line(sx(0.0), sy(-kLim), sx(0.0), sy(kLim), "#999999", 1.0, "4,3");
    for (const double level : {0.25, 0.5, 1.0, 2.0}) {
        for (const int sign_a : {-1, 1})
            for (const int sign_b : {-1, 1}) {
                std::vector<std::pair<double, double>> pts;
                for (int t = 0; t <= 60; ++t) {
                    const double a =
                        (level / kLim) *
                        std::pow(kLim * kLim / level, static_cast<double>(t) / 60.0);
                    const double b = level / a;
                    if (b > kLim * 1.0001) continue;
                    pts.emplace_back(sx(sign_a * a), sy(sign_b * b));
                }
                cv.polyline(pts, "#cccccc", 1.0);
            }
    }
    for (std::size_t i = 0; i < csv_paths.size(); ++i) {
        const std::string& path = csv_paths[i];
        const textio::CsvTable table = textio::read_csv(path);
        const std::vector<double> a = textio::column_values(table, "a", path);
        const std::vector<double> b = textio::column_values(table, "b", path);
        std::vector<std::pair<double, double>> pts;
        for (std::size_t t = 0; t < a.size(); ++t)
            if (std::isfinite(a[t]) && std::isfinite(b[t]))
                pts.emplace_back(sx(std::clamp(a[t], -kLim, kLim)),
                                 sy(std::clamp(b[t], -kLim, kLim)));
        cv.polyline(pts, kPalette[i % 6]);
        if (!pts.empty()) {
            cv.circle(pts.front().first, pts.front().second, 4.0, kPalette[i % 6]);
            cv.rect(pts.back().first - 3.5, pts.back().second - 3.5, 7.0, 7.0,
                    kPalette[i % 6]);
        }
    }
    cv.text((kLeft + kRight) / 2.0, kBottom + 36.0,
            "two-weight chain: paths from circle to square; dashed axes are the "
            "zero-loss set",
            "middle");
    cv.text((kLeft + kRight) / 2.0, kBottom + 18.0, "a (first weight)", "middle");
    cv.text(14.0, (kTop + kBottom) / 2.0, "b", "middle");
    cv.legend(resolve_labels(csv_paths, labels));
    return cv.close();
}

}  // namespace

PlotKind parse_plot_kind(const std::string& name) {
    if (name == "norm-curves") return PlotKind::NormCurves;
    if (name == "gram-heatmap") return PlotKind::GramHeatmap;
    if (name == "eigen-histogram") return PlotKind::EigenHistogram;
    if (name == "landscape-2d") return PlotKind::Landscape2d;
    throw std::invalid_argument("unknown plot kind '" + name +
                                "' (known: norm-curves, gram-heatmap, eigen-histogram, "
                                "landscape-2d)");
}

std::string render_plot(PlotKind kind, const std::vector<std::string>& csv_paths,
                        const std::vector<std::string>& labels) {
    switch (kind) {
        case PlotKind::NormCurves: return render_norm_curves(csv_paths, labels);
        case PlotKind::GramHeatmap: return render_gram_heatmap(csv_paths, labels);
        case PlotKind::EigenHistogram: return render_eigen_histogram(csv_paths, labels);
        case PlotKind::Landscape2d: return render_landscape(csv_paths, labels);
    }
    throw std::invalid_argument("render_plot: bad kind");
}

}  // namespace sgdlab
