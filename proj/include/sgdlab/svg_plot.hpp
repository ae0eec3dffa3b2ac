#pragma once

// Deterministic SVG renderers for the artifacts the command-line tool
// produces.  Every renderer reads plain CSV files, writes a fixed-size
// (640x480) standalone SVG string, and contains no timestamps or random
// identifiers, so re-rendering the same inputs is byte-identical.

#include <string>
#include <vector>

namespace sgdlab {

enum class PlotKind {
    NormCurves,      // step vs first-layer irrelevant norm, log-scale y
    GramHeatmap,     // square matrix from columns g0..g{n-1}
    EigenHistogram,  // 10-bin histogram of an "eigenvalue" column
    Landscape2d,     // optimizer paths in the (a, b) plane over loss contours
};

// Accepts "norm-curves", "gram-heatmap", "eigen-histogram", "landscape-2d".
// Throws std::invalid_argument listing the valid names otherwise.
PlotKind parse_plot_kind(const std::string& name);

// Renders one plot from the given CSV inputs.  NormCurves and Landscape2d
// accept one or more files (one curve/path each); the other kinds require
// exactly one.  `labels` names the curves in input order; when empty, file
// stems are used.  Schema problems (missing columns, ragged rows) throw
// std::runtime_error naming the file and the column.
std::string render_plot(PlotKind kind, const std::vector<std::string>& csv_paths,
                        const std::vector<std::string>& labels = {});

}  // namespace sgdlab
