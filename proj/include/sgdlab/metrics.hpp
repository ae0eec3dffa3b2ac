#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/linalg.hpp"
#include "sgdlab/network.hpp"
#include "sgdlab/optimizer.hpp"

namespace sgdlab {

// Trajectory metrics and detectors. Everything here is a pure function of
// its inputs; ensemble aggregation happens by merging returned values.

// Per-layer norms of the weights tied to irrelevant input directions, either
// from explicit coordinate indices (ground-truth split) or in decomposition
// basis coordinates. Layer 1 reports the Frobenius norm of the irrelevant
// columns of W_1 (expressed in the basis for the decomposition overload);
// diagonal nets restrict every layer to the irrelevant components; dense
// layers above the first have no input-aligned split, so their full
// Frobenius norm is reported.
std::vector<double> irrelevant_norms(const NetworkState& net, const NetworkSpec& spec,
                                     const std::vector<std::size_t>& irrelevant_columns);
std::vector<double> irrelevant_norms(const NetworkState& net, const NetworkSpec& spec,
                                     const RelevanceDecomposition& dec);

struct Histogram {
    std::vector<double> edges;        // bins + 1 ascending edges
    std::vector<std::size_t> counts;  // one per bin
};

struct GramSpectrum {
    Mat gram;                         // W * W^T
    std::vector<double> eigenvalues;  // non-increasing
    Histogram histogram;
};

GramSpectrum gram_spectrum(const Mat& w, std::size_t bins = 10);

struct SupportEntry {
    std::size_t component = 0;
    std::size_t argmin_layer = 1;    // 1-based layer whose |W_l[j,j]| is smallest
    double min_abs = 0.0;
    bool zeroed = false;             // min_abs <= tol
    std::vector<double> chain_abs;   // |W_l[j,j]| per layer
};

struct SupportReport {
    double tol = 0.0;
    std::vector<SupportEntry> entries;  // one per component
};

// Diagonal nets only: which layer carries each component's smallest weight,
// and whether that weight is below tol. Ties go to the earliest layer.
SupportReport support_layer(const NetworkState& net, const NetworkSpec& spec, double tol);

struct PhaseReport {
    std::optional<std::size_t> transition_step;
    double plateau_loss = 0.0;
    double oscillation_amplitude = 0.0;
};

// Finds the first record index where the loss stops decreasing (windowed
// relative decrease below plateau_tol) while oscillating (windowed standard
// deviation positive, or the loss has hit exactly zero). Windows are counted
// in records, so with a recording stride the step resolution is
// stride * window.
PhaseReport detect_phases(const std::vector<TrajectoryRecord>& traj, std::size_t window,
                          double plateau_tol);

struct ScalingPoint {
    double eta = 0.0;
    double b = 0.0;
    double steps = 0.0;
    bool reached = true;
};

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<ScalingPoint> used;
    std::size_t excluded = 0;
};

// Least-squares fit of log(steps) against log(b / eta^2). Slope near +1 is
// the linear-scaling law. Points with reached == false are excluded and
// counted; at least 4 usable points are required.
ScalingFit scaling_fit(const std::vector<ScalingPoint>& grid);

struct ShrinkExcess {
    double excess = 0.0;        // mean over seeds of (SGD shrink - GD shrink), per step
    double std_error = 0.0;     // standard error of that mean over seeds
    double gd_shrink = 0.0;     // per-step log shrink of the GD reference
    double sgd_shrink = 0.0;    // mean per-step log shrink across SGD seeds
    std::size_t seeds_used = 0;
    std::size_t excluded = 0;   // runs dropped (divergence / dead entries)
};

// Measured per-step extra shrink of epoch SGD over same-length GD on the
// irrelevant first-layer entries. Shrink of an entry is -log|w_T / w_0| / T,
// averaged over the matched entry set; the irrelevant split comes from the
// dataset's ground truth when present, otherwise from compute_relevance.
ShrinkExcess empirical_shrink_excess(const Dataset& ds, const NetworkState& net,
                                     const NetworkSpec& spec, double eta, std::size_t b,
                                     std::size_t epochs, std::size_t seed_count);

}  // namespace sgdlab
