#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "epifit/solver.hpp"

namespace epifit::cli {

/// One drawable line: y values over the shared time grid.
struct PlotSeries {
    std::string label;
    std::vector<double> y;
};

/// Self-contained SVG line plot (fixed canvas, axes, legend). Output bytes
/// depend only on the inputs: coordinates are printed with %.6g and no
/// timestamps or identifiers are embedded.
void write_svg(const std::filesystem::path& path, const std::string& title,
               const std::vector<double>& t, const std::vector<PlotSeries>& series);

/// CSV with a t column plus one column per series, values printed with
/// %.17g so the plot numbers are exact.
void write_csv(const std::filesystem::path& path, const std::vector<double>& t,
               const std::vector<PlotSeries>& series);

/// Writes per-channel SVG + CSV files (plus an all-channel overview SVG for
/// a single trajectory) into out_dir and returns the paths. When `overlay`
/// is given it must share the grid of `traj`; each channel then carries two
/// series labeled label_a / label_b.
std::vector<std::filesystem::path> emit_plot(const Trajectory& traj,
                                             const Trajectory* overlay,
                                             const std::vector<int>& channels,
                                             const std::filesystem::path& out_dir,
                                             const std::string& label_a,
                                             const std::string& label_b);

} // namespace epifit::cli
