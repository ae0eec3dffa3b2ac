#include "sgdlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"
#include "sgdlab/fixtures.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/optimizer.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab {

namespace {

Mat scalar_mat(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

double rel_diff(double a, double b) {
    return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)});
}

void add_check(VerifyReport& r, std::string name, bool pass, double value, double bound,
               std::string detail) {
    r.checks.push_back({std::move(name), pass, value, bound, std::move(detail)});
    r.all_pass = r.all_pass && pass;
}

// ---------------------------------------------------------------------- //

VerifyReport suite_theorem1() {
    VerifyReport r{"theorem1", {}, true};
    const double eta = 0.02;
    const std::vector<std::vector<std::size_t>> width_sets = {
        {6, 4, 4}, {6, 4, 5, 6}, {5, 3, 3, 4, 4}};
    for (const auto& widths : width_sets) {
        fixtures::SupportFixtureOptions opt;
        opt.d = widths[0];
        opt.r = 2;
        opt.m = 48;
        opt.outputs = widths.back();
        opt.seed = 100 + widths.size();
        const Dataset ds = fixtures::exact_support_dataset(opt);
        const RelevanceDecomposition dec =
            coordinate_decomposition(ds, *ds.ground_truth_relevant, kDefaultRelevanceTol);
        const NetworkSpec spec = NetworkSpec::dense(widths, Activation::Identity);
        NetworkState net = fixtures::aligned_tail_net(spec, 7000 + widths.size());
        const NetworkState before = net;
        step(net, spec, full_batch(ds), eta, 0.0);

        double worst = 0.0;
        std::size_t entries = 0;
        for (std::size_t i = 0; i < widths[1]; ++i)
            for (std::size_t j = opt.r; j < opt.d; ++j) {
                const ShrinkagePrediction p = predict_gd_multiplier(before, spec, dec, eta, i, j);
                const double ratio = net.weights[0](i, j) / before.weights[0](i, j);
                worst = std::max(worst, rel_diff(ratio, p.gd_factor));
                ++entries;
            }
        add_check(r, "per-entry-factor-depth" + std::to_string(widths.size() - 1),
                  worst < 1e-10, worst, 1e-10,
                  "one GD step multiplies each irrelevant first-layer entry by "
                  "1 - eta * tailGram[i,i] * E[x_j^2]; max relative error over " +
                      std::to_string(entries) + " entries");
    }

    {
        fixtures::SupportFixtureOptions opt;
        opt.d = 6;
        opt.r = 2;
        opt.m = 32;
        opt.unspanned = 2;
        opt.outputs = 4;
        opt.seed = 7;
        const Dataset ds = fixtures::exact_support_dataset(opt);
        const RelevanceDecomposition dec =
            coordinate_decomposition(ds, *ds.ground_truth_relevant, kDefaultRelevanceTol);
        const NetworkSpec spec = NetworkSpec::dense({6, 4, 4, 4}, Activation::Identity);
        NetworkState net = fixtures::aligned_tail_net(spec, 11);
        const NetworkState before = net;
        double worst_factor = 0.0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 4; j < 6; ++j) {
                const ShrinkagePrediction p = predict_gd_multiplier(net, spec, dec, 0.05, i, j);
                worst_factor = std::max(worst_factor, std::abs(p.gd_factor - 1.0));
            }
        step(net, spec, full_batch(ds), 0.05, 0.0);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 4; j < 6; ++j)
                if (net.weights[0](i, j) != before.weights[0](i, j)) ++changed;
        add_check(r, "unspanned-factor-is-one", worst_factor == 0.0, worst_factor, 0.0,
                  "directions with zero second moment predict multiplier exactly 1");
        add_check(r, "unspanned-weights-frozen", changed == 0,
                  static_cast<double>(changed), 0.0,
                  "weights on zero-second-moment directions are bitwise untouched by a "
                  "GD step");
    }
    return r;
}

VerifyReport suite_prop1() {
    VerifyReport r{"prop1", {}, true};
    fixtures::SupportFixtureOptions opt;
    opt.d = 8;
    opt.r = 3;
    opt.m = 48;
    opt.outputs = 2;
    opt.seed = 19;
    const Dataset ds = fixtures::exact_support_dataset(opt);
    const NetworkSpec spec = NetworkSpec::dense({8, 5, 4, 2}, Activation::Identity);
    NetworkState net = init(spec, InitScheme::kaiming_normal(), 21);
    const double eta = 0.4 * eta_max(net, spec, ds, 0.0);

    OptimizerConfig cfg;
    cfg.algorithm = Algorithm::Gd;
    cfg.eta = eta;
    cfg.steps = 400;
    RunProbes probes;
    probes.stride = 1;
    probes.irrelevant_columns = {3, 4, 5, 6, 7};
    const auto records = run_training(net, spec, ds, cfg, probes);

    double max_rise = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < records.size(); ++t)
        max_rise = std::max(max_rise, records[t + 1].irrel_norm_per_layer[0] -
                                          records[t].irrel_norm_per_layer[0]);
    const double slack = 1e-12 * records.front().irrel_norm_per_layer[0];
    add_check(r, "layer1-irrelevant-norm-non-increasing", max_rise <= slack, max_rise, slack,
              "under full-batch GD the first-layer irrelevant Frobenius norm never rises "
              "(400 steps, per-step check)");
    const double shrink =
        records.back().irrel_norm_per_layer[0] / records.front().irrel_norm_per_layer[0];
    add_check(r, "layer1-irrelevant-norm-shrinks", shrink < 0.9, shrink, 0.9,
              "the norm actually contracts over the run, not just holds still");
    return r;
}

VerifyReport suite_prop1a() {
    VerifyReport r{"prop1a", {}, true};
    fixtures::SupportFixtureOptions opt;
    opt.d = 8;
    opt.r = 2;
    opt.m = 32;
    opt.unspanned = 2;
    opt.outputs = 3;
    opt.seed = 9;
    const Dataset ds = fixtures::exact_support_dataset(opt);
    const NetworkSpec spec = NetworkSpec::dense({8, 4, 3}, Activation::Identity);

    for (const bool stochastic : {false, true}) {
        NetworkState net = init(spec, InitScheme::kaiming_normal(), 22);
        const NetworkState before = net;
        OptimizerConfig cfg;
        cfg.algorithm = stochastic ? Algorithm::SgdWithout : Algorithm::Gd;
        cfg.eta = 0.4 * eta_max(net, spec, ds, 0.0);
        cfg.batch_size = 3;
        cfg.steps = 300;
        cfg.seed = 4;
        run_training(net, spec, ds, cfg, {});
        std::size_t changed = 0;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 6; j < 8; ++j)
                if (net.weights[0](i, j) != before.weights[0](i, j)) ++changed;
        add_check(r,
                  stochastic ? "unspanned-frozen-under-sgd" : "unspanned-frozen-under-gd",
                  changed == 0, static_cast<double>(changed), 0.0,
                  "first-layer weights on directions the data never spans stay bitwise at "
                  "their initialization over 300 steps");
    }
    return r;
}

VerifyReport suite_prop_gd() {
    VerifyReport r{"propGD", {}, true};
    const std::size_t depth = 3, chains = 2, seeds = 2000;
    const SupportLayerCensus census = support_layer_census(depth, chains, seeds, 200000);

    const double events = static_cast<double>(seeds * chains);
    double max_dev = 0.0;
    for (std::size_t l = 0; l < depth; ++l) {
        std::size_t count = 0;
        for (std::size_t ch = 0; ch < chains; ++ch) count += census.layer_counts[ch][l];
        max_dev = std::max(max_dev, std::abs(count / events - 1.0 / depth));
    }
    add_check(r, "death-layer-uniform", max_dev <= 0.05, max_dev, 0.05,
              "the layer holding the smallest chain weight at support death is uniform "
              "over layers (2000 random inits, 2 chains, max deviation from 1/3)");

    const double both = census.all_first_layer / static_cast<double>(seeds);
    add_check(r, "first-layer-identification-rate", std::abs(both - 1.0 / 9.0) <= 0.05,
              both, 1.0 / 9.0,
              "probability that every irrelevant chain dies in layer 1 matches "
              "depth^-chains = 1/9 within 0.05");

    const double unresolved = census.unresolved / events;
    add_check(r, "chains-resolve-within-budget", unresolved <= 0.01, unresolved, 0.01,
              "fraction of chains classified at the step cap instead of at death");
    return r;
}

VerifyReport suite_two_step() {
    VerifyReport r{"two-step", {}, true};
    const double eta = 1e-3, a = 1.0, w1 = 0.05;
    const NetworkSpec spec = NetworkSpec::diagonal(2, 1, Activation::Identity);
    const Dataset ds = toy_as_dataset(ToySet::D2);

    const auto ratio_after = [&](const std::vector<std::vector<std::size_t>>& batches) {
        NetworkState n;
        n.weights = {scalar_mat(w1), scalar_mat(a)};
        for (const auto& rows : batches) step(n, spec, batch_of(ds, rows), eta, 0.0);
        return n.weights[0](0, 0) / w1;
    };

    const double one_a = ratio_after({{0}});
    const double one_b = ratio_after({{1}});
    const double worst_one = std::max(rel_diff(one_a, 1.0 - eta * a * a),
                                      rel_diff(one_b, 1.0 - 9.0 * eta * a * a));
    add_check(r, "one-step-multipliers-exact", worst_one < 1e-14, worst_one, 1e-14,
              "single-point steps on x in {1,3} multiply the first-layer weight by "
              "1 - eta*a^2*x^2 at machine precision");

    const ToyRates rates = toy_two_step_rates(eta, a);
    const double sgd_avg = 0.5 * (ratio_after({{0}, {1}}) + ratio_after({{1}, {0}}));
    const double gd = ratio_after({{0, 1}, {0, 1}});
    add_check(r, "two-step-sgd-rate", std::abs(sgd_avg - rates.sgd_rate) < 3e-6,
              std::abs(sgd_avg - rates.sgd_rate), 3e-6,
              "epoch of single-point steps (both orders averaged) lands on "
              "(1-eta*a^2)(1-9*eta*a^2) up to the second-layer drift");
    add_check(r, "two-step-gd-rate", std::abs(gd - rates.gd_rate) < 3e-6,
              std::abs(gd - rates.gd_rate), 3e-6,
              "two full-batch steps land on (1-5*eta*a^2)^2 up to the same drift");

    const double gap = gd - sgd_avg;
    const double predicted_gap = 16.0 * eta * eta * a * a * a * a;
    add_check(r, "sgd-strictly-faster", sgd_avg < gd && std::abs(gap - predicted_gap) <
                                                             0.2 * predicted_gap,
              gap, predicted_gap,
              "the stochastic epoch shrinks strictly more; the difference matches the "
              "second-order oscillation term 16*eta^2*a^4 within 20%");

    const TwoStepProducts prod = two_step_cancellation(0.1, 0.05);
    const double worst_prod = std::max(rel_diff(prod.sgd_product, 0.8075),
                                       rel_diff(prod.gd_product, 0.81));
    add_check(r, "oscillation-cancellation-identity", worst_prod < 1e-15, worst_prod, 1e-15,
              "(1-a+d)(1-a-d) = (1-a)^2 - d^2: (0.1, 0.05) gives (0.8075, 0.81)");
    return r;
}

VerifyReport suite_balancedness() {
    VerifyReport r{"balancedness", {}, true};

    {
        const NetworkSpec spec3 = NetworkSpec::diagonal(3, 1, Activation::Identity);
        NetworkState net;
        net.weights = {scalar_mat(0.7), scalar_mat(1.1), scalar_mat(0.9)};
        Dataset ds;
        ds.X = Mat(4, 1);
        ds.Y = Mat(4, 1);
        const double xs[4] = {1.2, -0.7, 0.4, 2.0};
        const double ys[4] = {0.5, 1.0, -0.3, 0.9};
        for (int i = 0; i < 4; ++i) {
            ds.X(i, 0) = xs[i];
            ds.Y(i, 0) = ys[i];
        }
        const Batch batch = batch_of(ds, {0, 2});
        const auto gaps0 = balancedness_gaps(net, spec3, 0);
        const auto pred = balancedness_update(gaps0, net, spec3, batch, 0, 0.05);
        step(net, spec3, batch, 0.05, 0.0);
        const auto gaps1 = balancedness_gaps(net, spec3, 0);
        double worst = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            worst = std::max(worst, std::abs(pred[i] - gaps1[i]));
        add_check(r, "per-step-gap-prediction-exact", worst < 1e-12, worst, 1e-12,
                  "each adjacent squared-weight gap picks up exactly the factor "
                  "1 - eta^2 * (rest of the chain)^2 * (batch residual)^2 in one step");
    }

    {
        const NetworkSpec spec2 = NetworkSpec::diagonal(2, 1, Activation::Identity);
        const Dataset ds = toy_as_dataset(ToySet::D1);
        const double g0 = 1.0 * 1.0 - 0.6 * 0.6;
        const auto run = [&](Algorithm alg, std::uint64_t seed) {
            NetworkState n;
            n.weights = {scalar_mat(0.6), scalar_mat(1.0)};
            OptimizerConfig cfg;
            cfg.algorithm = alg;
            cfg.eta = 0.1;
            cfg.batch_size = 1;
            cfg.steps = 2000;
            cfg.seed = seed;
            run_training(n, spec2, ds, cfg, {});
            return n;
        };
        const NetworkState gd = run(Algorithm::Gd, 0);
        const double g_gd = std::abs(balancedness_gaps(gd, spec2, 0)[0]);
        add_check(r, "gd-preserves-imbalance", g_gd > 0.1 * g0, g_gd, 0.1 * g0,
                  "full-batch training on zero-correlation data stops on the "
                  "zero-product manifold with the squared-weight gap intact");

        const NetworkState sgd = run(Algorithm::SgdWithout, 5);
        const double g_sgd = std::abs(balancedness_gaps(sgd, spec2, 0)[0]);
        const double mag =
            std::max(std::abs(sgd.weights[0](0, 0)), std::abs(sgd.weights[1](0, 0)));
        add_check(r, "sgd-collapses-gap", g_sgd < 1e-6, g_sgd, 1e-6,
                  "single-sample steps keep oscillating on the residuals and square the "
                  "gap away");
        add_check(r, "sgd-reaches-origin", mag < 0.05, mag, 0.05,
                  "both chain weights end near zero, not just their product");
    }
    return r;
}

VerifyReport suite_weight_decay() {
    VerifyReport r{"weight-decay", {}, true};
    fixtures::SupportFixtureOptions opt;
    opt.d = 7;
    opt.r = 2;
    opt.m = 32;
    opt.unspanned = 2;
    opt.outputs = 3;
    opt.seed = 13;
    const Dataset ds = fixtures::exact_support_dataset(opt);
    const NetworkSpec spec = NetworkSpec::dense({7, 5, 3}, Activation::Identity);
    const double eta = 0.02, lambda = 0.05;
    const double keep = 1.0 - eta * lambda;

    {
        NetworkState net = init(spec, InitScheme::kaiming_normal(), 31);
        std::vector<std::vector<double>> hist;  // unspanned entries per record
        OptimizerConfig cfg;
        cfg.algorithm = Algorithm::Gd;
        cfg.eta = eta;
        cfg.weight_decay = lambda;
        cfg.steps = 200;
        RunProbes probes;
        probes.stride = 1;
        probes.extra = [&hist](std::size_t, const NetworkState& n, TrajectoryRecord&) {
            std::vector<double> u;
            for (std::size_t i = 0; i < 5; ++i)
                for (std::size_t j = 5; j < 7; ++j) u.push_back(n.weights[0](i, j));
            hist.push_back(std::move(u));
        };
        run_training(net, spec, ds, cfg, probes);
        std::size_t mismatches = 0;
        for (std::size_t t = 0; t + 1 < hist.size(); ++t)
            for (std::size_t e = 0; e < hist[t].size(); ++e)
                if (hist[t + 1][e] != keep * hist[t][e]) ++mismatches;
        add_check(r, "unspanned-ratio-exactly-geometric", mismatches == 0,
                  static_cast<double>(mismatches), 0.0,
                  "zero-gradient weights decay bitwise by (1 - eta*lambda) every step");
    }

    for (const bool stochastic : {false, true}) {
        NetworkState net = init(spec, InitScheme::kaiming_normal(), 31);
        std::vector<double> norms;
        std::vector<std::size_t> steps_at;
        OptimizerConfig cfg;
        cfg.algorithm = stochastic ? Algorithm::SgdWithout : Algorithm::Gd;
        cfg.eta = eta;
        cfg.weight_decay = lambda;
        cfg.batch_size = 2;
        cfg.steps = 4000;
        cfg.seed = 17;
        RunProbes probes;
        probes.stride = 40;
        probes.irrelevant_columns = {2, 3, 4, 5, 6};
        const auto records = run_training(net, spec, ds, cfg, probes);
        double worst_excess = -std::numeric_limits<double>::infinity();
        const double n0 = records.front().irrel_norm_per_layer[0];
        for (const auto& rec : records) {
            const double envelope =
                n0 * std::pow(keep, static_cast<double>(rec.step)) * (1.0 + 1e-10);
            worst_excess =
                std::max(worst_excess, rec.irrel_norm_per_layer[0] - envelope);
        }
        add_check(r,
                  stochastic ? "sgd-decay-within-geometric-envelope"
                             : "gd-decay-within-geometric-envelope",
                  worst_excess <= 0.0, worst_excess, 0.0,
                  "with weight decay the first-layer irrelevant norm stays under "
                  "norm0 * (1 - eta*lambda)^t at every recorded step");
    }

    {
        OppositePairFixture fx = opposite_relevant_pair_fixture();
        OptimizerConfig cfg;
        cfg.algorithm = Algorithm::SgdWithout;
        cfg.eta = 1e-3;
        cfg.batch_size = 1;
        cfg.weight_decay = 1e-2;
        cfg.steps = 200;
        cfg.seed = 3;
        std::vector<std::array<double, 2>> hist;
        RunProbes probes;
        probes.stride = 1;
        probes.extra = [&hist](std::size_t, const NetworkState& n, TrajectoryRecord&) {
            hist.push_back({n.weights[0](0, 1), n.weights[0](1, 1)});
        };
        run_training(fx.net, fx.spec, fx.ds, cfg, probes);
        double max_inc = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t + 1 < hist.size(); ++t)
            for (int e = 0; e < 2; ++e)
                max_inc = std::max(max_inc, std::abs(hist[t + 1][e]) - std::abs(hist[t][e]));
        add_check(r, "relu-single-sample-decay-shrinks-irrelevant", max_inc < 0.0, max_inc,
                  0.0,
                  "on the opposite-pair fixture, single-sample steps with weight decay "
                  "shrink every irrelevant first-layer weight every step");
    }
    return r;
}

VerifyReport suite_gradcheck() {
    VerifyReport r{"gradcheck", {}, true};
    struct Case {
        NetworkSpec spec;
        std::uint64_t seed;
        const char* name;
    };
    const std::vector<Case> cases = {
        {NetworkSpec::dense({5, 4, 3}, Activation::Identity), 41, "dense-identity-depth2"},
        {NetworkSpec::dense({5, 4, 3}, Activation::Relu), 42, "dense-relu-depth2"},
        {NetworkSpec::dense({4, 3, 3, 2}, Activation::Identity), 43,
         "dense-identity-depth3"},
        {NetworkSpec::diagonal(3, 4, Activation::Identity), 44, "diagonal-identity-depth3"},
        {NetworkSpec::diagonal(2, 3, Activation::Relu), 45, "diagonal-relu-depth2"},
    };
    for (const auto& c : cases) {
        const double err = max_grad_check_error(c.spec, c.seed);
        add_check(r, c.name, err < 1e-5, err, 1e-5,
                  "backpropagated gradients match central finite differences on every "
                  "weight");
    }
    return r;
}

VerifyReport suite_relu_counterexample() {
    VerifyReport r{"relu-counterexample", {}, true};
    {
        const OppositePairFixture fx = opposite_relevant_pair_fixture();
        std::vector<double> x1(fx.ds.d()), x2(fx.ds.d());
        for (std::size_t j = 0; j < fx.ds.d(); ++j) {
            x1[j] = fx.ds.X(0, j);
            x2[j] = fx.ds.X(1, j);
        }
        const auto m1 = forward(fx.net, fx.spec, x1).masks.layer[0];
        const auto m2 = forward(fx.net, fx.spec, x2).masks.layer[0];
        std::size_t overlap = 0, active1 = 0, active2 = 0;
        for (std::size_t i = 0; i < m1.size(); ++i) {
            overlap += (m1[i] > 0 && m2[i] > 0) ? 1 : 0;
            active1 += m1[i] > 0 ? 1 : 0;
            active2 += m2[i] > 0 ? 1 : 0;
        }
        add_check(r, "points-activate-disjoint-units",
                  overlap == 0 && active1 > 0 && active2 > 0,
                  static_cast<double>(overlap), 0.0,
                  "the opposite relevant parts flip the preactivation signs, so the two "
                  "points drive disjoint hidden units");
    }

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

    {
        const auto hist = track(0.0);
        double min_inc = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t + 1 < hist.size(); ++t)
            for (int e = 0; e < 2; ++e) min_inc = std::min(min_inc, hist[t + 1][e] - hist[t][e]);
        add_check(r, "irrelevant-weights-grow-without-decay", min_inc > 0.0, min_inc, 0.0,
                  "under plain GD the residual is driven by the relevant parts, and both "
                  "irrelevant first-layer weights rise strictly at every one of 100 steps");
        const double total = hist.back()[0] - hist.front()[0];
        add_check(r, "growth-is-resolvable", total > 1e-6, total, 1e-6,
                  "the accumulated growth is far above floating-point noise");
    }

    {
        const auto hist = track(1e-2);
        double max_inc = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t + 1 < hist.size(); ++t)
            for (int e = 0; e < 2; ++e)
                max_inc = std::max(max_inc, std::abs(hist[t + 1][e]) - std::abs(hist[t][e]));
        add_check(r, "decay-restores-shrinkage", max_inc < 0.0, max_inc, 0.0,
                  "with weight decay 1e-2 every irrelevant first-layer weight falls "
                  "monotonically over the same 100 steps");
    }
    return r;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
    return {"theorem1",     "prop1",        "prop1a",   "propGD",    "two-step",
            "balancedness", "weight-decay", "gradcheck", "relu-counterexample"};
}

VerifyReport run_verify_suite(const std::string& suite) {
    if (suite == "theorem1") return suite_theorem1();
    if (suite == "prop1") return suite_prop1();
    if (suite == "prop1a") return suite_prop1a();
    if (suite == "propGD") return suite_prop_gd();
    if (suite == "two-step") return suite_two_step();
    if (suite == "balancedness") return suite_balancedness();
    if (suite == "weight-decay") return suite_weight_decay();
    if (suite == "gradcheck") return suite_gradcheck();
    if (suite == "relu-counterexample") return suite_relu_counterexample();
    std::string known;
    for (const auto& n : verify_suite_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown verify suite '" + suite + "' (known: " + known + ")");
}

std::string verify_report_json(const VerifyReport& report) {
    nlohmann::json j;
    j["suite"] = report.suite;
    j["all_pass"] = report.all_pass;
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"value", c.value},
                          {"bound", c.bound},
                          {"detail", c.detail}});
    j["checks"] = checks;
    return j.dump(2);
}

SupportLayerCensus support_layer_census(std::size_t depth, std::size_t chains,
                                        std::size_t seeds, std::size_t max_steps) {
    if (depth < 2) throw std::invalid_argument("support_layer_census: depth must be >= 2");
    if (chains < 1 || seeds < 1)
        throw std::invalid_argument("support_layer_census: need chains >= 1, seeds >= 1");
    SupportLayerCensus census;
    census.depth = depth;
    census.chains = chains;
    census.seeds = seeds;
    census.layer_counts.assign(chains, std::vector<std::size_t>(depth, 0));
    const double kill = 1e-3;

    for (std::uint64_t s = 1; s <= seeds; ++s) {
        Rng rng(s);
        bool all_first = true;
        for (std::size_t ch = 0; ch < chains; ++ch) {
            std::vector<double> theta(depth);
            for (auto& t : theta) t = rng.normal();
            double e = 0.0;
            for (int i = 0; i < 8; ++i) {
                const double x = rng.normal();
                e += x * x;
            }
            e /= 8.0;

            const auto min_abs = [&] {
                std::size_t arg = 0;
                for (std::size_t h = 1; h < depth; ++h)
                    if (std::abs(theta[h]) < std::abs(theta[arg])) arg = h;
                return arg;
            };

            std::size_t arg = min_abs();
            if (std::abs(theta[arg]) > kill) {
                // Step size from the curvature bound at init: the largest
                // second derivative over chain weights is E[x^2] times the
                // squared co-product of the smallest one, and it only decays
                // from there along the trajectory.
                double prod = 1.0;
                for (double t : theta) prod *= std::abs(t);
                const double co_max = prod / std::abs(theta[arg]);
                const double eta = 0.5 / (e * co_max * co_max + 1e-9);

                std::size_t step_count = 0;
                std::vector<double> next(depth);
                for (; step_count < max_steps; ++step_count) {
                    double p = 1.0;
                    for (double t : theta) p *= t;
                    const double residual = p * e;  // labels are identically zero
                    for (std::size_t h = 0; h < depth; ++h) {
                        double co = 1.0;
                        for (std::size_t i = 0; i < depth; ++i)
                            if (i != h) co *= theta[i];
                        next[h] = theta[h] - eta * co * residual;
                    }
                    theta = next;
                    arg = min_abs();
                    if (std::abs(theta[arg]) <= kill) break;
                }
                if (step_count == max_steps) ++census.unresolved;
            }
            ++census.layer_counts[ch][arg];
            if (arg != 0) all_first = false;
        }
        if (all_first) ++census.all_first_layer;
    }
    return census;
}

OppositePairFixture opposite_relevant_pair_fixture() {
    OppositePairFixture fx;
    const double big = 5.0, tiny = 5e-4;
    fx.ds.X = Mat(2, 2);
    fx.ds.Y = Mat(2, 1);
    fx.ds.X(0, 0) = big;
    fx.ds.X(0, 1) = tiny;
    fx.ds.X(1, 0) = -big;
    fx.ds.X(1, 1) = tiny;
    fx.ds.Y(0, 0) = big;
    fx.ds.Y(1, 0) = big;
    fx.ds.ground_truth_relevant = std::vector<std::size_t>{0};
    fx.ds.name = "opposite-relevant-pair";

    fx.spec = NetworkSpec::dense({2, 2, 1}, Activation::Relu);
    Mat w1(2, 2), w2(1, 2);
    // Under-fitted init: each row represents one point's sign of the relevant
    // part; the shared output weights are positive so the residual is
    // negative on both points and pushes the irrelevant entries up.
    w1(0, 0) = 0.8;
    w1(0, 1) = 0.1;
    w1(1, 0) = -0.8;
    w1(1, 1) = 0.1;
    w2(0, 0) = 1.0;
    w2(0, 1) = 1.0;
    fx.net.weights = {w1, w2};
    fx.irrelevant_columns = {1};
    return fx;
}

double max_grad_check_error(const NetworkSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = 6;
    Dataset ds;
    ds.X = Mat(m, spec.input_width());
    ds.Y = Mat(m, spec.output_width());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < spec.input_width(); ++j) ds.X(i, j) = rng.normal();
        for (std::size_t j = 0; j < spec.output_width(); ++j) ds.Y(i, j) = rng.normal();
    }
    NetworkState net = init(spec, InitScheme::kaiming_normal(), seed + 1);
    const Batch batch = full_batch(ds);
    const BackwardResult base = backward_mse(net, spec, batch);

    double worst = 0.0;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        auto& data = net.weights[l].data();
        for (std::size_t idx = 0; idx < data.size(); ++idx) {
            const double w0 = data[idx];
            const double h = 1e-6 * std::max(1.0, std::abs(w0));
            data[idx] = w0 + h;
            const double lp = backward_mse(net, spec, batch).loss;
            data[idx] = w0 - h;
            const double lm = backward_mse(net, spec, batch).loss;
            data[idx] = w0;
            const double numeric = (lp - lm) / (2.0 * h);
            const double analytic = base.grads.g[l].data()[idx];
            const double rel = std::abs(numeric - analytic) /
                               std::max(1e-8, std::abs(numeric) + std::abs(analytic));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace sgdlab
