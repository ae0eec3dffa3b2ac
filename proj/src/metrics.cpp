#include "sgdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgdlab {

std::vector<double> irrelevant_norms(const NetworkState& net, const NetworkSpec& spec,
                                     const std::vector<std::size_t>& irrelevant_columns) {
    for (std::size_t j : irrelevant_columns)
        if (j >= spec.input_width())
            throw std::invalid_argument("irrelevant_norms: column out of range");
    return per_layer_irrelevant_norms(net, spec, irrelevant_columns);
}

std::vector<double> irrelevant_norms(const NetworkState& net, const NetworkSpec& spec,
                                     const RelevanceDecomposition& dec) {
    const std::size_t d = dec.basis.rows();
    if (spec.input_width() != d)
        throw std::invalid_argument("irrelevant_norms: decomposition width mismatch");

    if (spec.topology == Topology::Diagonal) {
        // Diagonal chains only have per-component structure when the basis
        // is a coordinate permutation; recover the component indices.
        std::vector<std::size_t> columns;
        for (std::size_t c = dec.r; c < d; ++c) {
            std::size_t nonzero = d, count = 0;
            for (std::size_t row = 0; row < d; ++row)
                if (std::abs(dec.basis(row, c)) > 1e-12) {
                    nonzero = row;
                    ++count;
                }
            if (count != 1)
                throw std::invalid_argument(
                    "irrelevant_norms: diagonal nets need a coordinate-aligned basis");
            columns.push_back(nonzero);
        }
        return per_layer_irrelevant_norms(net, spec, columns);
    }

    std::vector<double> norms(spec.depth, 0.0);
    const Mat w1b = net.weights[0] * dec.basis;
    double s = 0.0;
    for (std::size_t i = 0; i < w1b.rows(); ++i)
        for (std::size_t c = dec.r; c < d; ++c) s += w1b(i, c) * w1b(i, c);
    norms[0] = std::sqrt(s);
    for (std::size_t l = 2; l <= spec.depth; ++l) norms[l - 1] = frobenius_norm(net.weights[l - 1]);
    return norms;
}

GramSpectrum gram_spectrum(const Mat& w, std::size_t bins) {
    GramSpectrum out;
    out.gram = w * transpose(w);
    if (out.gram.rows() == 0) return out;
    const SymEigen eig = sym_eigen(out.gram);
    out.eigenvalues = eig.values;

    if (bins == 0 || out.eigenvalues.empty()) return out;
    double lo = *std::min_element(out.eigenvalues.begin(), out.eigenvalues.end());
    double hi = *std::max_element(out.eigenvalues.begin(), out.eigenvalues.end());
    lo = std::min(lo, 0.0);
    if (hi <= lo) hi = lo + 1.0;  // all-equal spectrum: give the bins width
    out.histogram.edges.resize(bins + 1);
    out.histogram.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t k = 0; k <= bins; ++k)
        out.histogram.edges[k] = lo + width * static_cast<double>(k);
    for (double v : out.eigenvalues) {
        std::size_t bin = static_cast<std::size_t>((v - lo) / width);
        if (bin >= bins) bin = bins - 1;  // top edge inclusive
        ++out.histogram.counts[bin];
    }
    return out;
}

SupportReport support_layer(const NetworkState& net, const NetworkSpec& spec, double tol) {
    if (spec.topology != Topology::Diagonal)
        throw std::invalid_argument("support_layer: requires a diagonal network");
    if (!(tol >= 0.0)) throw std::invalid_argument("support_layer: tol must be >= 0");

    SupportReport report;
    report.tol = tol;
    const std::size_t width = spec.widths[1];
    for (std::size_t j = 0; j < width; ++j) {
        SupportEntry e;
        e.component = j;
        e.chain_abs.resize(spec.depth);
        for (std::size_t l = 0; l < spec.depth; ++l)
            e.chain_abs[l] = std::abs(net.weights[l](j, 0));
        const auto it = std::min_element(e.chain_abs.begin(), e.chain_abs.end());
        e.argmin_layer = static_cast<std::size_t>(it - e.chain_abs.begin()) + 1;
        e.min_abs = *it;
        e.zeroed = e.min_abs <= tol;
        report.entries.push_back(std::move(e));
    }
    return report;
}

namespace {

struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
};

WindowStats window_stats(const std::vector<TrajectoryRecord>& traj, std::size_t begin,
                         std::size_t count) {
    WindowStats ws;
    for (std::size_t k = 0; k < count; ++k) ws.mean += traj[begin + k].loss;
    ws.mean /= static_cast<double>(count);
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double d = traj[begin + k].loss - ws.mean;
        acc += d * d;
    }
    ws.stddev = std::sqrt(acc / static_cast<double>(count));
    return ws;
}

}  // namespace

PhaseReport detect_phases(const std::vector<TrajectoryRecord>& traj, std::size_t window,
                          double plateau_tol) {
    if (window == 0) throw std::invalid_argument("detect_phases: window must be >= 1");
    if (traj.size() < 2 * window)
        throw std::invalid_argument("detect_phases: trajectory shorter than two windows");
    for (std::size_t k = 1; k < traj.size(); ++k)
        if (traj[k].step <= traj[k - 1].step)
            throw std::invalid_argument("detect_phases: steps must be strictly increasing");

    PhaseReport report;
    for (std::size_t i = window; i + window <= traj.size(); ++i) {
        const WindowStats prev = window_stats(traj, i - window, window);
        const WindowStats cur = window_stats(traj, i, window);
        const double rel_decrease = (prev.mean - cur.mean) / std::max(prev.mean, 1e-300);
        const bool stalled = rel_decrease < plateau_tol;
        const bool oscillating = cur.stddev > 0.0 || cur.mean == 0.0;
        if (stalled && oscillating) {
            report.transition_step = traj[i].step;
            report.plateau_loss = cur.mean;
            report.oscillation_amplitude = cur.stddev;
            return report;
        }
    }
    const WindowStats last = window_stats(traj, traj.size() - window, window);
    report.plateau_loss = last.mean;
    report.oscillation_amplitude = last.stddev;
    return report;
}

ScalingFit scaling_fit(const std::vector<ScalingPoint>& grid) {
    ScalingFit fit;
    for (const ScalingPoint& p : grid) {
        if (!p.reached) {
            ++fit.excluded;
            continue;
        }
        if (!(p.eta > 0.0) || !(p.b > 0.0) || !(p.steps > 0.0))
            throw std::invalid_argument("scaling_fit: points need positive eta, b, steps");
        fit.used.push_back(p);
    }
    if (fit.used.size() < 4)
        throw std::invalid_argument("scaling_fit: needs at least 4 reached grid points");

    const std::size_t n = fit.used.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = std::log(fit.used[k].b / (fit.used[k].eta * fit.used[k].eta));
        ys[k] = std::log(fit.used[k].steps);
        sx += xs[k];
        sy += ys[k];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    if (sxx < 1e-30)
        throw std::invalid_argument("scaling_fit: grid is degenerate in b/eta^2");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = ys[k] - (fit.intercept + fit.slope * xs[k]);
        ss_res += e * e;
    }
    fit.r2 = syy < 1e-30 ? 1.0 : 1.0 - ss_res / syy;
    return fit;
}

namespace {

std::vector<std::size_t> irrelevant_split(const Dataset& ds) {
    std::vector<std::size_t> irrelevant;
    if (ds.ground_truth_relevant.has_value()) {
        std::vector<bool> is_rel(ds.d(), false);
        for (std::size_t c : *ds.ground_truth_relevant) is_rel.at(c) = true;
        for (std::size_t c = 0; c < ds.d(); ++c)
            if (!is_rel[c]) irrelevant.push_back(c);
    } else {
        const RelevanceDecomposition dec = compute_relevance(ds, kDefaultRelevanceTol);
        for (std::size_t c = dec.r; c < ds.d(); ++c) irrelevant.push_back(c);
    }
    return irrelevant;
}

// Mean log shrink magnitude over the matched entries; nullopt when any
// entry died (hit exact zero) or went non-finite.
std::optional<double> mean_log_shrink(const NetworkState& before, const NetworkState& after,
                                      const NetworkSpec& spec,
                                      const std::vector<std::size_t>& cols) {
    double acc = 0.0;
    std::size_t count = 0;
    const bool diag = spec.topology == Topology::Diagonal;
    for (std::size_t j : cols) {
        const std::size_t rows = diag ? 1 : before.weights[0].rows();
        for (std::size_t i = 0; i < rows; ++i) {
            const double w0 = diag ? before.weights[0](j, 0) : before.weights[0](i, j);
            const double wt = diag ? after.weights[0](j, 0) : after.weights[0](i, j);
            if (w0 == 0.0) continue;  // nothing to shrink
            if (wt == 0.0 || !std::isfinite(wt)) return std::nullopt;
            acc += std::log(std::abs(wt / w0));
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return acc / static_cast<double>(count);
}

}  // namespace

ShrinkExcess empirical_shrink_excess(const Dataset& ds, const NetworkState& net,
                                     const NetworkSpec& spec, double eta, std::size_t b,
                                     std::size_t epochs, std::size_t seed_count) {
    if (spec.activation != Activation::Identity)
        throw std::invalid_argument("empirical_shrink_excess: requires identity activation");
    if (epochs == 0 || seed_count == 0)
        throw std::invalid_argument("empirical_shrink_excess: epochs and seed_count >= 1");
    const std::size_t n = ds.n();
    if (b == 0 || b > n) throw std::invalid_argument("empirical_shrink_excess: bad batch size");

    const std::vector<std::size_t> cols = irrelevant_split(ds);
    if (cols.empty())
        throw std::invalid_argument("empirical_shrink_excess: no irrelevant directions");

    const std::size_t batches_per_epoch = (n + b - 1) / b;
    const std::size_t steps = epochs * batches_per_epoch;

    ShrinkExcess out;

    // GD reference over the same number of steps.
    NetworkState gd_net = net;
    const Batch full = full_batch(ds);
    for (std::size_t t = 0; t < steps; ++t) step(gd_net, spec, full, eta, 0.0);
    const std::optional<double> gd_log = mean_log_shrink(net, gd_net, spec, cols);
    if (!gd_log.has_value())
        throw std::invalid_argument("empirical_shrink_excess: reference run degenerated");
    out.gd_shrink = -*gd_log / static_cast<double>(steps);

    std::vector<double> sgd_shrinks;
    for (std::size_t s = 0; s < seed_count; ++s) {
        OptimizerConfig cfg;
        cfg.algorithm = Algorithm::SgdWithout;
        cfg.eta = eta;
        cfg.batch_size = b;
        cfg.steps = steps;
        cfg.seed = 1000003ULL * (s + 1);
        const BatchSchedule schedule = make_schedule(cfg, n);
        NetworkState run = net;
        bool ok = true;
        for (const auto& idx : schedule.batches) {
            step(run, spec, batch_of(ds, idx), eta, 0.0);
            if (!std::isfinite(run.weights[0](0, 0))) {
                ok = false;
                break;
            }
        }
        const std::optional<double> lg = ok ? mean_log_shrink(net, run, spec, cols)
                                            : std::nullopt;
        if (!lg.has_value()) {
            ++out.excluded;
            continue;
        }
        sgd_shrinks.push_back(-*lg / static_cast<double>(steps));
    }
    out.seeds_used = sgd_shrinks.size();
    if (out.seeds_used == 0)
        throw std::runtime_error("empirical_shrink_excess: every sampled run diverged");

    double mean = 0.0;
    for (double v : sgd_shrinks) mean += v;
    mean /= static_cast<double>(out.seeds_used);
    out.sgd_shrink = mean;
    out.excess = mean - out.gd_shrink;
    if (out.seeds_used > 1) {
        double var = 0.0;
        for (double v : sgd_shrinks) var += (v - mean) * (v - mean);
        var /= static_cast<double>(out.seeds_used - 1);
        out.std_error = std::sqrt(var / static_cast<double>(out.seeds_used));
    }
    return out;
}

}  // namespace sgdlab
