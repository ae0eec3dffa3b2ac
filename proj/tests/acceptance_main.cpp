// Acceptance gate: ten end-to-end checks of the laboratory against its
// closed-form predictions, printed one line per criterion.  Exit code is 0
// only if every criterion passes (correctness and runtime budget).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sgdlab/config.hpp"
#include "sgdlab/experiment.hpp"
#include "sgdlab/fixtures.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/network.hpp"
#include "sgdlab/optimizer.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/rng.hpp"
#include "sgdlab/svg_plot.hpp"
#include "sgdlab/verify.hpp"
#include "textio.hpp"

using namespace sgdlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max({1e-300, std::abs(got), std::abs(want)});
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Mat scalar_mat(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

// ------------------------------------------------------------------ 1 --- //
// One full-batch GD step multiplies every irrelevant first-layer entry by
// 1 - eta * tailGram[i,i] * E[x_j^2]; 50 fixtures, <= 1e-10 relative.

Outcome criterion_1() {
    constexpr double kTol = 1e-10;
    double worst = 0.0;
    std::size_t entries = 0;
    for (std::size_t k = 0; k < 50; ++k) {
        fixtures::SupportFixtureOptions opt;
        opt.d = 5 + k % 6;                        // input width 5..10
        opt.r = 1 + k % 3;                        // 1..3 relevant coordinates
        opt.m = 32;
        opt.seed = 4000 + k;
        std::vector<std::size_t> widths = {opt.d, std::min<std::size_t>(8, opt.r + 2 + k % 4)};
        const std::size_t depth = 2 + k % 3;      // 2..4 weight layers
        while (widths.size() < depth + 1)
            widths.push_back(std::min<std::size_t>(8, widths.back() + (k + widths.size()) % 2));
        opt.outputs = widths.back();
        const Dataset ds = fixtures::exact_support_dataset(opt);
        const RelevanceDecomposition dec =
            coordinate_decomposition(ds, *ds.ground_truth_relevant, kDefaultRelevanceTol);
        const NetworkSpec spec = NetworkSpec::dense(widths, Activation::Identity);
        NetworkState net = fixtures::aligned_tail_net(spec, 9000 + k);
        const NetworkState before = net;
        const double eta = 0.01 + 0.002 * static_cast<double>(k % 5);
        step(net, spec, full_batch(ds), eta, 0.0);
        for (std::size_t i = 0; i < widths[1]; ++i)
            for (std::size_t j = opt.r; j < opt.d; ++j) {
                const ShrinkagePrediction p =
                    predict_gd_multiplier(before, spec, dec, eta, i, j);
                const double ratio = net.weights[0](i, j) / before.weights[0](i, j);
                worst = std::max(worst, rel_err(ratio, p.gd_factor));
                ++entries;
            }
    }
    return {worst < kTol,
            fmt("max rel err %.2e over %zu entries in 50 fixtures (tol 1e-10)", worst,
                entries)};
}

// ------------------------------------------------------------------ 2 --- //
// 2000-step runs: first-layer irrelevant norm never rises under GD (slack
// 1e-10); unspanned columns bitwise frozen at lambda=0 and exactly geometric
// with ratio (1 - eta*lambda) at lambda>0.

Outcome criterion_2() {
    fixtures::SupportFixtureOptions opt;
    opt.d = 9;
    opt.r = 3;
    opt.m = 40;
    opt.unspanned = 2;
    opt.outputs = 3;
    opt.seed = 77;
    const Dataset ds = fixtures::exact_support_dataset(opt);
    const NetworkSpec spec = NetworkSpec::dense({9, 6, 3}, Activation::Identity);
    const NetworkState net0 = init(spec, InitScheme::kaiming_normal(), 78);
    const double eta = 0.4 * eta_max(net0, spec, ds, 0.0);

    double max_rise = -1.0;
    std::size_t frozen_mismatch = 0, geometric_mismatch = 0;
    for (const double lambda : {0.0, 0.01}) {
        NetworkState net = net0;
        std::vector<std::vector<double>> unspanned_hist;
        OptimizerConfig cfg;
        cfg.algorithm = Algorithm::Gd;
        cfg.eta = eta;
        cfg.weight_decay = lambda;
        cfg.steps = 2000;
        RunProbes probes;
        probes.stride = 1;
        probes.irrelevant_columns = {3, 4, 5, 6, 7, 8};
        probes.extra = [&](std::size_t, const NetworkState& n, TrajectoryRecord&) {
            std::vector<double> u;
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = 7; j < 9; ++j) u.push_back(n.weights[0](i, j));
            unspanned_hist.push_back(std::move(u));
        };
        const auto records = run_training(net, spec, ds, cfg, probes);
        for (std::size_t t = 0; t + 1 < records.size(); ++t)
            max_rise = std::max(max_rise, records[t + 1].irrel_norm_per_layer[0] -
                                              records[t].irrel_norm_per_layer[0]);
        const double keep = 1.0 - eta * lambda;
        for (std::size_t t = 0; t + 1 < unspanned_hist.size(); ++t)
            for (std::size_t e = 0; e < unspanned_hist[t].size(); ++e) {
                if (lambda == 0.0 && unspanned_hist[t + 1][e] != unspanned_hist[t][e])
                    ++frozen_mismatch;
                if (lambda > 0.0 && unspanned_hist[t + 1][e] != keep * unspanned_hist[t][e])
                    ++geometric_mismatch;
            }
    }
    const bool pass = max_rise <= 1e-10 && frozen_mismatch == 0 && geometric_mismatch == 0;
    return {pass,
            fmt("max per-step norm rise %.2e (slack 1e-10); unspanned: %zu frozen / %zu "
                "geometric mismatches over 2000 steps",
                max_rise, frozen_mismatch, geometric_mismatch)};
}

// ------------------------------------------------------------------ 3 --- //
// Two-point toy set {1, 3} with zero labels: one-step multipliers exact;
// averaged two-step single-sample rate beats the full-batch rate by
// 16*eta^2*a^4.  Zero-correlation toy set: 5e4 single-sample steps reach the
// origin while full-batch stalls on the zero-product manifold.

Outcome criterion_3() {
    const double eta = 1e-3, a = 1.0, w1 = 1e-3;
    const NetworkSpec spec2 = NetworkSpec::diagonal(2, 1, Activation::Identity);
    const Dataset d2 = toy_as_dataset(ToySet::D2);
    const auto ratio_after = [&](const std::vector<std::vector<std::size_t>>& batches) {
        NetworkState n;
        n.weights = {scalar_mat(w1), scalar_mat(a)};
        for (const auto& rows : batches) step(n, spec2, batch_of(d2, rows), eta, 0.0);
        return n.weights[0](0, 0) / w1;
    };
    const double one_err = std::max(rel_err(ratio_after({{0}}), 1.0 - eta),
                                    rel_err(ratio_after({{1}}), 1.0 - 9.0 * eta));
    const double sgd = 0.5 * (ratio_after({{0}, {1}}) + ratio_after({{1}, {0}}));
    const double gd = ratio_after({{0, 1}, {0, 1}});
    const double gap_err = rel_err(gd - sgd, 16.0 * eta * eta * a * a * a * a);

    const Dataset d1 = toy_as_dataset(ToySet::D1);
    const auto endpoint = [&](Algorithm alg) {
        NetworkState n;
        n.weights = {scalar_mat(0.6), scalar_mat(1.0)};
        OptimizerConfig cfg;
        cfg.algorithm = alg;
        cfg.eta = 0.05;
        cfg.batch_size = 1;
        cfg.steps = 50000;
        cfg.seed = 9;
        run_training(n, spec2, d1, cfg, {});
        return std::hypot(n.weights[0](0, 0), n.weights[1](0, 0));
    };
    const double sgd_norm = endpoint(Algorithm::SgdWithout);
    const double gd_norm = endpoint(Algorithm::Gd);

    const bool pass = one_err < 1e-14 && gap_err < 1e-3 && sgd < gd &&
                      sgd_norm < 0.2 * gd_norm;
    return {pass,
            fmt("one-step rel err %.1e (tol 1e-14); rate-gap rel err %.1e (tol 1e-3); "
                "endpoint norms single-sample %.2e vs full-batch %.3f",
                one_err, gap_err, sgd_norm, gd_norm)};
}

// ------------------------------------------------------------------ 4 --- //
// Depth-3 diagonal chains, 2000 random inits, 2 irrelevant chains each: the
// layer holding the dying weight is uniform over the 3 layers (+-0.05) and
// both chains pick layer 1 with probability (1/3)^2 = 0.111 (+-0.05).

Outcome criterion_4() {
    const SupportLayerCensus c = support_layer_census(3, 2, 2000, 200000);
    double worst_dev = 0.0;
    for (std::size_t ch = 0; ch < 2; ++ch)
        for (std::size_t l = 0; l < 3; ++l)
            worst_dev = std::max(worst_dev, std::abs(c.layer_counts[ch][l] / 2000.0 - 1.0 / 3.0));
    const double both = c.all_first_layer / 2000.0;
    const double both_dev = std::abs(both - 1.0 / 9.0);
    const bool pass = worst_dev <= 0.05 && both_dev <= 0.05 && c.unresolved == 0;
    return {pass,
            fmt("per-chain layer deviation %.3f (tol 0.05); both-layer-1 rate %.3f vs "
                "0.111 (tol 0.05); %zu/4000 chains unresolved",
                worst_dev, both, c.unresolved)};
}

// ------------------------------------------------------------------ 5 --- //
// Linear scaling law: depth-2 diagonal net on misspecified labels; median
// steps until the first-layer irrelevant norm falls below 1e-3 of its start
// scales like b/eta^2 (log-log slope in [0.7, 1.3], r^2 > 0.8).

Outcome criterion_5() {
    DatasetConfig dc;
    dc.source = "diag-misspec";
    dc.d = 4;
    dc.r = 2;
    dc.m = 50;
    dc.noise = 1.5;
    dc.seed = 11;
    const Dataset ds = build_dataset(dc);
    const NetworkSpec spec = NetworkSpec::diagonal(2, 4, Activation::Identity);
    const NetworkState net0 = init(spec, InitScheme::iid_normal(0.5), 12);
    const std::vector<std::size_t> irrelevant = {2, 3};
    const double init_norm = per_layer_irrelevant_norms(net0, spec, irrelevant)[0];
    const double threshold = 1e-3 * init_norm;

    std::vector<ScalingPoint> points;
    for (const double eta : {0.02, 0.05, 0.1})
        for (const std::size_t b : {2, 5, 10, 25}) {
            std::vector<double> steps_per_seed;
            bool all_reached = true;
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                NetworkState net = net0;
                const std::size_t chunk = static_cast<std::size_t>(std::clamp(
                    16.0 * static_cast<double>(b) / (eta * eta), 10000.0, 150000.0));
                std::size_t total = 0;
                double crossed_at = -1.0;
                for (std::size_t ci = 0; ci < 64 && crossed_at < 0.0; ++ci) {
                    OptimizerConfig cfg;
                    cfg.algorithm = Algorithm::SgdWithout;
                    cfg.eta = eta;
                    cfg.batch_size = b;
                    cfg.steps = chunk;
                    cfg.seed = seed * 1000003 + ci;
                    RunProbes probes;
                    probes.stride = std::max<std::size_t>(1, chunk / 300);
                    probes.irrelevant_columns = irrelevant;
                    const auto recs = run_training(net, spec, ds, cfg, probes);
                    for (const auto& rec : recs)
                        if (rec.irrel_norm_per_layer[0] < threshold) {
                            crossed_at = static_cast<double>(total + rec.step);
                            break;
                        }
                    total += chunk;
                }
                if (crossed_at < 0.0)
                    all_reached = false;
                else
                    steps_per_seed.push_back(crossed_at);
            }
            ScalingPoint p;
            p.eta = eta;
            p.b = static_cast<double>(b);
            p.reached = all_reached && !steps_per_seed.empty();
            p.steps = p.reached ? median(steps_per_seed) : 0.0;
            points.push_back(p);
        }
    const ScalingFit fit = scaling_fit(points);
    const bool pass = fit.used.size() == 12 && fit.slope >= 0.7 && fit.slope <= 1.3 &&
                      fit.r2 > 0.8;
    return {pass,
            fmt("12-cell grid: slope %.3f (need [0.7, 1.3]), r2 %.4f (need > 0.8), "
                "%zu/12 cells reached threshold",
                fit.slope, fit.r2, fit.used.size())};
}

// ------------------------------------------------------------------ 6 --- //
// 200 two-point zero-label fixtures: the averaged two-step single-sample
// shrink never loses to the two-step full-batch shrink, strictly when the
// per-point second moments differ, with excess eta^2 * delta^2 (+-20%).

Outcome criterion_6() {
    const double eta = 0.01, w1 = 1e-3;
    const NetworkSpec spec = NetworkSpec::diagonal(2, 1, Activation::Identity);
    Rng rng(999);
    double worst_excess_err = 0.0;
    std::size_t strict_failures = 0;
    for (std::size_t f = 0; f < 200; ++f) {
        double x1 = rng.normal(), x2 = rng.normal();
        while (std::abs(x1 * x1 - x2 * x2) < 1e-2) x2 = rng.normal();
        Dataset ds;
        ds.X = Mat(2, 1);
        ds.Y = Mat(2, 1);
        ds.X(0, 0) = x1;
        ds.X(1, 0) = x2;
        ds.Y(0, 0) = 0.0;
        ds.Y(1, 0) = 0.0;
        const auto ratio_after = [&](const std::vector<std::vector<std::size_t>>& batches) {
            NetworkState n;
            n.weights = {scalar_mat(w1), scalar_mat(1.0)};
            for (const auto& rows : batches) step(n, spec, batch_of(ds, rows), eta, 0.0);
            return n.weights[0](0, 0) / w1;
        };
        const double sgd = 0.5 * (ratio_after({{0}, {1}}) + ratio_after({{1}, {0}}));
        const double gd = ratio_after({{0, 1}, {0, 1}});
        if (!(sgd < gd)) ++strict_failures;
        const double delta = 0.5 * (x1 * x1 - x2 * x2);
        worst_excess_err = std::max(worst_excess_err,
                                    std::abs((gd - sgd) - eta * eta * delta * delta) /
                                        (eta * eta * delta * delta));
    }
    const bool pass = strict_failures == 0 && worst_excess_err < 0.2;
    return {pass,
            fmt("strict dominance failures %zu/200; worst excess error %.2e of "
                "predicted eta^2*delta^2 (tol 20%%)",
                strict_failures, worst_excess_err)};
}

// ------------------------------------------------------------------ 7 --- //
// Balancedness on misspecified data: the per-step predicted gap update is
// within 10*eta^3 of simulation; the gap dies (< 1e-6) under single-sample
// steps but survives (> 0.1x) under full-batch GD with the same budget.

Outcome criterion_7() {
    DatasetConfig dc;
    dc.source = "diag-misspec";
    dc.d = 2;
    dc.r = 1;
    dc.m = 16;
    dc.noise = 1.0;
    dc.seed = 21;
    const Dataset ds = build_dataset(dc);
    const NetworkSpec spec = NetworkSpec::diagonal(2, 2, Activation::Identity);
    NetworkState net0;
    Mat w1(2, 1), w2(2, 1);
    w1(0, 0) = 0.9;  // relevant chain
    w2(0, 0) = 0.8;
    w1(1, 0) = 0.6;  // irrelevant chain, gap 1.1^2 - 0.6^2 = 0.85
    w2(1, 0) = 1.1;
    net0.weights = {w1, w2};
    const double eta = 0.1;
    const double g0 = std::abs(balancedness_gaps(net0, spec, 1)[0]);

    // per-step prediction, cycling single-sample batches
    double worst_pred_err = 0.0;
    NetworkState net = net0;
    for (std::size_t t = 0; t < 2000; ++t) {
        const Batch batch = batch_of(ds, {t % ds.n()});
        const auto pred = balancedness_update(balancedness_gaps(net, spec, 1), net, spec,
                                              batch, 1, eta);
        step(net, spec, batch, eta, 0.0);
        const auto actual = balancedness_gaps(net, spec, 1);
        for (std::size_t i = 0; i < pred.size(); ++i)
            worst_pred_err = std::max(worst_pred_err, std::abs(pred[i] - actual[i]));
    }

    const auto run = [&](Algorithm alg) {
        NetworkState n = net0;
        OptimizerConfig cfg;
        cfg.algorithm = alg;
        cfg.eta = eta;
        cfg.batch_size = 1;
        cfg.steps = 30000;
        cfg.seed = 5;
        const auto recs = run_training(n, spec, ds, cfg, RunProbes{});
        return n;
    };
    const double g_sgd = std::abs(balancedness_gaps(run(Algorithm::SgdWithout), spec, 1)[0]);
    const double g_gd = std::abs(balancedness_gaps(run(Algorithm::Gd), spec, 1)[0]);

    const bool pass = worst_pred_err <= 10.0 * eta * eta * eta && g_sgd < 1e-6 &&
                      g_gd > 0.1 * g0;
    return {pass,
            fmt("per-step gap prediction err %.1e (tol %.0e); end gaps: single-sample "
                "%.1e (< 1e-6), full-batch %.3f (> %.3f)",
                worst_pred_err, 10.0 * eta * eta * eta, g_sgd, g_gd, 0.1 * g0)};
}

// ------------------------------------------------------------------ 8 --- //
// Piecewise-linear counterexample: without decay at least one irrelevant
// first-layer weight strictly rises for 100 steps; with decay 1e-2 all of
// them fall monotonically.

Outcome criterion_8() {
    const auto track = [](double lambda) {
        OppositePairFixture fx = opposite_relevant_pair_fixture();
        OptimizerConfig cfg;
        cfg.algorithm = Algorithm::Gd;
        cfg.eta = 1e-3;
        cfg.weight_decay = lambda;
        cfg.steps = 100;
        std::vector<std::array<double, 2>> hist;
        RunProbes probes;
        probes.stride = 1;
        probes.extra = [&hist](std::size_t, const NetworkState& n, TrajectoryRecord&) {
            hist.push_back({n.weights[0](0, 1), n.weights[0](1, 1)});
        };
        run_training(fx.net, fx.spec, fx.ds, cfg, probes);
        return hist;
    };
    const auto grow = track(0.0);
    double min_inc = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < grow.size(); ++t)
        min_inc = std::min(min_inc, grow[t + 1][0] - grow[t][0]);
    const auto shrink = track(1e-2);
    double max_inc = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < shrink.size(); ++t)
        for (int e = 0; e < 2; ++e)
            max_inc = std::max(max_inc,
                               std::abs(shrink[t + 1][e]) - std::abs(shrink[t][e]));
    const bool pass = min_inc > 0.0 && max_inc < 0.0;
    return {pass,
            fmt("lambda=0: min per-step increment %.2e (must be > 0); lambda=1e-2: max "
                "per-step increment %.2e (must be < 0)",
                min_inc, max_inc)};
}

// ------------------------------------------------------------------ 9 --- //
// Backpropagation matches central finite differences on every weight of a
// depth x activation x topology grid, relative error < 1e-5.

Outcome criterion_9() {
    constexpr double kTol = 1e-5;
    double worst = 0.0;
    std::uint64_t seed = 300;
    for (const Activation act : {Activation::Identity, Activation::Relu}) {
        for (const auto& widths : std::vector<std::vector<std::size_t>>{
                 {5, 4, 3}, {5, 4, 4, 2}, {4, 4, 3, 3, 2}})
            worst = std::max(worst,
                             max_grad_check_error(NetworkSpec::dense(widths, act), ++seed));
        for (const std::size_t depth : {2, 3, 4})
            worst = std::max(
                worst, max_grad_check_error(NetworkSpec::diagonal(depth, 3, act), ++seed));
    }
    return {worst < kTol, fmt("max rel gradient error %.2e over 12 architectures "
                              "(tol 1e-5)",
                              worst)};
}

// ----------------------------------------------------------------- 10 --- //
// Determinism: the same config produces byte-identical CSV, summary, and SVG
// artifacts on repeated runs.

Outcome criterion_10() {
    const std::string cfg_text =
        "[dataset]\nsource = diag-misspec\nd = 4\nr = 2\nm = 32\nnoise = 0.8\nseed = 5\n"
        "[network]\ntopology = diagonal\ndepth = 2\ninit = iid-normal\ninit_scale = "
        "0.5\nseed = 6\n"
        "[optimizer]\nalgorithm = sgd-without\neta = 0.1\nbatch_size = 2\nsteps = "
        "2000\nweight_decay = 0.001\nseed = 7\n"
        "[probes]\nstride = 10\nmetrics = w1-min-abs,balance-gap\n";
    const ExperimentConfig cfg = parse_experiment_config(cfg_text, "acceptance.cfg");
    const std::string base = (std::filesystem::temp_directory_path() /
                              "sgdlab_acceptance_runs")
                                 .string();
    std::filesystem::remove_all(base);
    const RunArtifacts a = run_experiment(cfg, base + "/a");
    const RunArtifacts b = run_experiment(cfg, base + "/b");
    const bool csv_same = textio::read_file(a.csv_path) == textio::read_file(b.csv_path);
    const bool sum_same =
        textio::read_file(a.summary_path) == textio::read_file(b.summary_path);
    const bool svg_same = render_plot(PlotKind::NormCurves, {a.csv_path}) ==
                          render_plot(PlotKind::NormCurves, {b.csv_path});
    return {csv_same && sum_same && svg_same,
            fmt("repeat runs byte-identical: csv %s, summary %s, svg %s",
                csv_same ? "yes" : "NO", sum_same ? "yes" : "NO",
                svg_same ? "yes" : "NO")};
}

}  // namespace

int main() {
    struct Entry {
        const char* title;
        double budget_s;
        std::function<Outcome()> fn;
    };
    const std::vector<Entry> entries = {
        {"one-step shrinkage factors match the closed form", 10, criterion_1},
        {"irrelevant norm monotone; unspanned frozen / geometric", 30, criterion_2},
        {"two-point toy rates; single-sample reaches the origin", 20, criterion_3},
        {"dying-layer census uniform; both-first rate 1/9", 300, criterion_4},
        {"steps-to-threshold scales like b/eta^2", 600, criterion_5},
        {"single-sample shrink dominates by eta^2*delta^2", 60, criterion_6},
        {"balancedness gap: predicted per step; dies only under SGD", 120, criterion_7},
        {"piecewise-linear growth without decay, shrinkage with", 10, criterion_8},
        {"backprop matches finite differences", 30, criterion_9},
        {"repeated runs are byte-identical", 120, criterion_10},
    };

    int failures = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entries[i].fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs < entries[i].budget_s;
        const bool pass = out.pass && in_budget;
        if (!pass) ++failures;
        std::printf("%s  %2zu. %s — %s [%.1fs / %.0fs budget]\n", pass ? "PASS" : "FAIL",
                    i + 1, entries[i].title, out.detail.c_str(), secs,
                    entries[i].budget_s);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all 10 criteria passed\n");
    return failures > 0 ? 1 : 0;
}
