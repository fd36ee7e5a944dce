#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "epifit/common.hpp"
#include "epifit/models.hpp"

namespace epifit::cli {

namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kMarginL = 70, kMarginR = 160, kMarginT = 40, kMarginB = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#17becf", "#bcbd22", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 10;

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
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

struct Range {
    double lo, hi;
};

Range padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        double pad = (lo == 0.0) ? 1.0 : std::abs(lo) * 0.05 + 1e-12;
        return {lo - pad, hi + pad};
    }
    double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

} // namespace

void write_svg(const std::filesystem::path& path, const std::string& title,
               const std::vector<double>& t, const std::vector<PlotSeries>& series) {
    if (t.empty() || series.empty()) throw Error("plot needs a grid and at least one series");
    for (const auto& s : series) {
        if (s.y.size() != t.size()) {
            throw DimensionError("series '" + s.label + "' length does not match the grid");
        }
    }

    double y_lo = series[0].y[0], y_hi = y_lo;
    for (const auto& s : series) {
        for (double v : s.y) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    Range yr = padded_range(y_lo, y_hi);
    Range xr = padded_range(t.front(), t.back());
    const double plot_w = kWidth - kMarginL - kMarginR;
    const double plot_h = kHeight - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    auto py = [&](double y) {
        return kMarginT + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
           "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
           fmt(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(kMarginL) + "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + xml_escape(title) + "</text>\n";

    // Axis frame and 5-interval linear ticks with value labels.
    svg += "<rect x=\"" + fmt(kMarginL) + "\" y=\"" + fmt(kMarginT) + "\" width=\"" +
           fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
           "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        double gx = px(fx), gy = py(fy);
        svg += "<line x1=\"" + fmt(gx) + "\" y1=\"" + fmt(kMarginT + plot_h) + "\" x2=\"" +
               fmt(gx) + "\" y2=\"" + fmt(kMarginT + plot_h + 5) + "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + fmt(gx) + "\" y=\"" + fmt(kMarginT + plot_h + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               fmt(fx) + "</text>\n";
        svg += "<line x1=\"" + fmt(kMarginL - 5) + "\" y1=\"" + fmt(gy) + "\" x2=\"" +
               fmt(kMarginL) + "\" y2=\"" + fmt(gy) + "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + fmt(kMarginL - 8) + "\" y=\"" + fmt(gy + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               fmt(fy) + "</text>\n";
    }
    svg += "<text x=\"" + fmt(kMarginL + plot_w / 2) + "\" y=\"" + fmt(kHeight - 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
           "time</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(kMarginT + plot_h / 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 " + fmt(kMarginT + plot_h / 2) +
           ")\">population</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kPalette[k % kPaletteSize];
        std::string points;
        for (std::size_t i = 0; i < t.size(); ++i) {
            points += fmt(px(t[i])) + "," + fmt(py(series[k].y[i]));
            if (i + 1 < t.size()) points += " ";
        }
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
        double ly = kMarginT + 10 + 18.0 * static_cast<double>(k);
        svg += "<line x1=\"" + fmt(kWidth - kMarginR + 10) + "\" y1=\"" + fmt(ly) +
               "\" x2=\"" + fmt(kWidth - kMarginR + 34) + "\" y2=\"" + fmt(ly) +
               "\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(kWidth - kMarginR + 40) + "\" y=\"" + fmt(ly + 4) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" +
               xml_escape(series[k].label) + "</text>\n";
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << svg;
}

void write_csv(const std::filesystem::path& path, const std::vector<double>& t,
               const std::vector<PlotSeries>& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "t";
    for (const auto& s : series) out << "," << s.label;
    out << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << fmt(t[i], "%.17g");
        for (const auto& s : series) out << "," << fmt(s.y[i], "%.17g");
        out << "\n";
    }
}

std::vector<std::filesystem::path> emit_plot(const Trajectory& traj,
                                             const Trajectory* overlay,
                                             const std::vector<int>& channels,
                                             const std::filesystem::path& out_dir,
                                             const std::string& label_a,
                                             const std::string& label_b) {
    if (overlay != nullptr && overlay->t_grid != traj.t_grid) {
        throw Error("overlay trajectory grid does not match (sizes " +
                    std::to_string(traj.t_grid.size()) + " vs " +
                    std::to_string(overlay->t_grid.size()) + ")");
    }
    if (overlay != nullptr &&
        overlay->states.cols() != traj.states.cols()) {
        throw DimensionError("overlay trajectory channel count does not match");
    }
    const ModelSpec& spec = find_model(traj.model_id);
    std::filesystem::create_directories(out_dir);

    auto channel_label = [&](int c) {
        return c < static_cast<int>(spec.state_labels.size())
                   ? spec.state_labels[static_cast<std::size_t>(c)]
                   : "ch" + std::to_string(c);
    };
    auto column = [](const Trajectory& tr, int c) {
        std::vector<double> y(static_cast<std::size_t>(tr.states.rows()));
        for (Eigen::Index i = 0; i < tr.states.rows(); ++i) {
            y[static_cast<std::size_t>(i)] = tr.states(i, c);
        }
        return y;
    };

    std::vector<std::filesystem::path> written;
    for (int c : channels) {
        if (c < 0 || c >= static_cast<int>(traj.n_states())) {
            throw DimensionError("channel " + std::to_string(c) + " out of range for " +
                                 traj.model_id);
        }
        std::string label = channel_label(c);
        std::vector<PlotSeries> series;
        if (overlay == nullptr) {
            series.push_back({label, column(traj, c)});
        } else {
            series.push_back({label + " (" + label_a + ")", column(traj, c)});
            series.push_back({label + " (" + label_b + ")", column(*overlay, c)});
        }
        auto svg_path = out_dir / ("ch_" + label + ".svg");
        auto csv_path = out_dir / ("ch_" + label + ".csv");
        write_svg(svg_path, traj.model_id + ": " + label, traj.t_grid, series);
        write_csv(csv_path, traj.t_grid, series);
        written.push_back(svg_path);
        written.push_back(csv_path);
    }

    if (overlay == nullptr && channels.size() > 1) {
        std::vector<PlotSeries> all;
        for (int c : channels) all.push_back({channel_label(c), column(traj, c)});
        auto path = out_dir / "all_channels.svg";
        write_svg(path, traj.model_id + ": all compartments", traj.t_grid, all);
        written.push_back(path);
    }
    return written;
}

} // namespace epifit::cli
