#include "sgdlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <thread>

#include "json.hpp"
#include "sgdlab/oracle.hpp"
#include "sgdlab/rng.hpp"
#include "textio.hpp"

namespace fs = std::filesystem;

namespace sgdlab {

namespace {

using textio::fmt17;

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Per-component regression data for diagonal chains: each input coordinate
// gets its own label column. The first r components carry y = x exactly; the
// rest carry zero-mean noise projected orthogonal to their input column, so
// the best linear fit there is 0 while the residual second moment stays
// positive whenever noise > 0.
Dataset make_diag_misspec(const DatasetConfig& c) {
    Rng rng(c.seed);
    Mat x(c.m, c.d), y(c.m, c.d);
    for (std::size_t i = 0; i < c.m; ++i)
        for (std::size_t j = 0; j < c.d; ++j) x(i, j) = rng.normal();
    for (std::size_t j = 0; j < c.d; ++j) {
        if (j < c.r) {
            for (std::size_t i = 0; i < c.m; ++i) y(i, j) = x(i, j);
            continue;
        }
        std::vector<double> g(c.m);
        double gx = 0.0, xx = 0.0;
        for (std::size_t i = 0; i < c.m; ++i) {
            g[i] = rng.normal();
            gx += g[i] * x(i, j);
            xx += x(i, j) * x(i, j);
        }
        const double proj = xx > 0.0 ? gx / xx : 0.0;
        for (std::size_t i = 0; i < c.m; ++i) y(i, j) = c.noise * (g[i] - proj * x(i, j));
    }
    Dataset ds;
    ds.X = std::move(x);
    ds.Y = std::move(y);
    std::vector<std::size_t> rel(c.r);
    for (std::size_t j = 0; j < c.r; ++j) rel[j] = j;
    ds.ground_truth_relevant = std::move(rel);
    ds.name = "diag-misspec-d" + std::to_string(c.d) + "-r" + std::to_string(c.r);
    return ds;
}

Activation to_activation(const std::string& s) {
    return s == "relu" ? Activation::Relu : Activation::Identity;
}

Algorithm to_algorithm(const std::string& s) {
    if (s == "gd") return Algorithm::Gd;
    if (s == "sgd-with") return Algorithm::SgdWith;
    return Algorithm::SgdWithout;
}

InitScheme to_init(const NetworkConfig& c) {
    if (c.init == "kaiming-uniform") return InitScheme::kaiming_uniform();
    if (c.init == "iid-normal") return InitScheme::iid_normal(c.init_scale);
    return InitScheme::kaiming_normal();
}

// Extra CSV column names contributed by the configured metrics, in order.
std::vector<std::string> extra_columns(const std::vector<std::string>& metrics) {
    std::vector<std::string> out;
    for (const auto& m : metrics) {
        if (m == "w1-min-abs") out.push_back("w1_min_abs");
        if (m == "tail-gram-trace") out.push_back("tail_gram_trace");
        if (m == "balance-gap") out.push_back("balance_gap");
        if (m == "toy-ab") {
            out.push_back("a");
            out.push_back("b");
        }
    }
    return out;
}

std::function<void(std::size_t, const NetworkState&, TrajectoryRecord&)> metrics_hook(
    const std::vector<std::string>& metrics, const NetworkSpec& spec) {
    if (metrics.empty()) return {};
    return [metrics, &spec](std::size_t, const NetworkState& net, TrajectoryRecord& rec) {
        for (const auto& m : metrics) {
            if (m == "w1-min-abs") {
                const Mat w1 = dense_weight(net, spec, 1);
                double mn = std::numeric_limits<double>::infinity();
                for (double v : w1.data()) mn = std::min(mn, std::abs(v));
                rec.extras.emplace_back("w1_min_abs", mn);
            } else if (m == "tail-gram-trace") {
                const Mat tail = tail_product(net, spec);
                double tr = 0.0;
                for (double v : tail.data()) tr += v * v;
                rec.extras.emplace_back("tail_gram_trace", tr);
            } else if (m == "balance-gap") {
                double g = 0.0;
                for (std::size_t comp = 0; comp < spec.input_width(); ++comp)
                    for (double v : balancedness_gaps(net, spec, comp))
                        g = std::max(g, std::abs(v));
                rec.extras.emplace_back("balance_gap", g);
            } else if (m == "toy-ab") {
                rec.extras.emplace_back("a", net.weights[1](0, 0));
                rec.extras.emplace_back("b", net.weights[0](0, 0));
            }
        }
    };
}

bool has_format(const OutputConfig& out, const std::string& f) {
    return std::find(out.formats.begin(), out.formats.end(), f) != out.formats.end();
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records, std::size_t depth,
                           const std::vector<std::string>& extras) {
    std::string csv = "step,loss";
    for (std::size_t l = 1; l <= depth; ++l) csv += ",irrel_norm_L" + std::to_string(l);
    csv += ",grad_norm";
    for (const auto& name : extras) csv += "," + name;
    csv += "\n";
    for (const auto& rec : records) {
        csv += std::to_string(rec.step) + "," + fmt17(rec.loss);
        for (std::size_t l = 0; l < depth; ++l)
            csv += "," + fmt17(l < rec.irrel_norm_per_layer.size()
                                   ? rec.irrel_norm_per_layer[l]
                                   : 0.0);
        csv += "," + fmt17(rec.grad_norm);
        for (const auto& [name, value] : rec.extras) {
            (void)name;
            csv += "," + fmt17(value);
        }
        csv += "\n";
    }
    return csv;
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const BuiltExperiment& built,
                            const std::vector<TrajectoryRecord>& records, double eta_cap,
                            bool diverged, std::size_t divergence_step) {
    nlohmann::json s;
    s["config"] = nlohmann::json::parse(config_to_json(cfg));
    s["dataset"] = {{"name", built.ds.name},
                    {"n", built.ds.n()},
                    {"d", built.ds.d()},
                    {"k", built.ds.k()}};
    s["irrelevant_columns"] = built.irrelevant_columns;
    s["eta_max"] = eta_cap;
    s["seeds"] = {{"dataset", cfg.dataset.seed},
                  {"network", cfg.network.seed},
                  {"optimizer", cfg.optimizer.seed}};
    s["records"] = records.size();
    s["diverged"] = diverged;
    s["divergence_step"] =
        diverged ? nlohmann::json(divergence_step) : nlohmann::json(nullptr);

    if (records.empty()) {
        s["final"] = nullptr;
    } else {
        const auto& last = records.back();
        s["final"] = {{"step", last.step},
                      {"loss", last.loss},
                      {"grad_norm", last.grad_norm},
                      {"irrel_norms", last.irrel_norm_per_layer}};
    }

    if (!diverged && records.size() >= 10) {
        const PhaseReport phase = detect_phases(records, 5, 1e-3);
        nlohmann::json p;
        p["transition_step"] = phase.transition_step
                                   ? nlohmann::json(*phase.transition_step)
                                   : nlohmann::json(nullptr);
        p["plateau_loss"] = phase.plateau_loss;
        p["oscillation_amplitude"] = phase.oscillation_amplitude;
        s["phase"] = p;
    } else {
        s["phase"] = nullptr;
    }

    if (built.spec.topology == Topology::Diagonal) {
        const SupportReport rep = support_layer(built.net, built.spec, 0.0);
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : rep.entries) {
            // Scale-free zeroing rule: a chain counts as zeroed when its
            // smallest weight is 1e-6 of the largest weight in the chain.
            double chain_max = 0.0;
            for (double v : e.chain_abs) chain_max = std::max(chain_max, v);
            const bool zeroed = e.min_abs <= 1e-6 * chain_max;
            entries.push_back({{"component", e.component},
                               {"argmin_layer", e.argmin_layer},
                               {"min_abs", e.min_abs},
                               {"chain_abs", e.chain_abs},
                               {"zeroed", zeroed}});
        }
        s["support"] = {{"relative_tol", 1e-6}, {"entries", entries}};
    } else {
        s["support"] = nullptr;
    }
    return s;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Dataset build_dataset(const DatasetConfig& cfg) {
    if (cfg.source == "synthetic")
        return gen_synthetic(cfg.d, cfg.r, cfg.m,
                             cfg.target == "sine-of-sum" ? SyntheticTarget::SineOfSum
                                                         : SyntheticTarget::LinearSum,
                             cfg.eps, cfg.seed);
    if (cfg.source == "diag-misspec") return make_diag_misspec(cfg);
    if (cfg.source == "toy")
        return toy_as_dataset(cfg.toy == "d2" ? ToySet::D2 : ToySet::D1);
    return load_idx(cfg.idx_images, cfg.idx_labels, cfg.idx_center);
}

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
    validate_experiment_config(cfg, "config");
    BuiltExperiment b;
    b.ds = build_dataset(cfg.dataset);

    const Activation act = to_activation(cfg.network.activation);
    if (cfg.network.topology == "dense") {
        b.spec = NetworkSpec::dense(cfg.network.widths, act);
        if (b.spec.input_width() != b.ds.d())
            throw ConfigError("network.widths input " + std::to_string(b.spec.input_width()) +
                              " does not match dataset '" + b.ds.name + "' input width " +
                              std::to_string(b.ds.d()));
        if (b.spec.output_width() != b.ds.k())
            throw ConfigError("network.widths output " +
                              std::to_string(b.spec.output_width()) +
                              " does not match dataset '" + b.ds.name + "' label width " +
                              std::to_string(b.ds.k()));
    } else {
        if (b.ds.k() != b.ds.d())
            throw ConfigError("diagonal networks need matching input and label widths; "
                              "dataset '" +
                              b.ds.name + "' provides " + std::to_string(b.ds.d()) + " -> " +
                              std::to_string(b.ds.k()));
        b.spec = NetworkSpec::diagonal(cfg.network.depth, b.ds.d(), act);
    }
    b.net = init(b.spec, to_init(cfg.network), cfg.network.seed);

    b.opt.algorithm = to_algorithm(cfg.optimizer.algorithm);
    b.opt.eta = cfg.optimizer.eta;
    b.opt.batch_size = cfg.optimizer.batch_size;
    b.opt.weight_decay = cfg.optimizer.weight_decay;
    b.opt.steps = cfg.optimizer.steps;
    b.opt.seed = cfg.optimizer.seed;
    if (b.opt.algorithm != Algorithm::Gd && b.opt.batch_size > b.ds.n())
        throw ConfigError("optimizer.batch_size " + std::to_string(b.opt.batch_size) +
                          " exceeds the dataset size " + std::to_string(b.ds.n()));

    if (cfg.probes.irrelevant == "none") {
        // leave empty
    } else if (cfg.probes.irrelevant == "auto") {
        if (b.ds.ground_truth_relevant) {
            std::vector<bool> rel(b.ds.d(), false);
            for (std::size_t j : *b.ds.ground_truth_relevant) rel[j] = true;
            for (std::size_t j = 0; j < b.ds.d(); ++j)
                if (!rel[j]) b.irrelevant_columns.push_back(j);
        }
    } else {
        for (const auto& item : split_commas(cfg.probes.irrelevant)) {
            const std::size_t col = static_cast<std::size_t>(std::stoull(item));
            if (col >= b.ds.d())
                throw ConfigError("probes.irrelevant coordinate " + item +
                                  " is out of range for dataset input width " +
                                  std::to_string(b.ds.d()));
            b.irrelevant_columns.push_back(col);
        }
    }
    return b;
}

std::string default_output_root() {
    const char* env = std::getenv("SGDLAB_OUT");
    return env && *env ? env : "out";
}

RunArtifacts run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    BuiltExperiment built = build_experiment(cfg);

    RunArtifacts art;
    art.dir = !out_dir.empty()
                  ? out_dir
                  : (!cfg.output.dir.empty() ? cfg.output.dir : default_output_root());
    fs::create_directories(art.dir);

    const double eta_cap = eta_max(built.net, built.spec, built.ds,
                                   cfg.optimizer.weight_decay);
    if (cfg.probes.check_eta_max && cfg.optimizer.eta >= eta_cap)
        std::cerr << "run: warning: eta " << cfg.optimizer.eta << " >= eta_max estimate "
                  << eta_cap << "\n";

    RunProbes probes;
    probes.stride = cfg.probes.stride;
    probes.irrelevant_columns = built.irrelevant_columns;
    probes.extra = metrics_hook(cfg.probes.metrics, built.spec);

    std::vector<TrajectoryRecord> records;
    try {
        records = run_training(built.net, built.spec, built.ds, built.opt, probes);
    } catch (const DivergenceError& e) {
        records = e.partial;
        art.diverged = true;
        art.divergence_step = e.step;
    }

    art.records = records.size();
    art.final_loss = records.empty() ? std::nan("") : records.back().loss;
    art.trajectory = records;

    if (has_format(cfg.output, "csv")) {
        art.csv_path = art.dir + "/trajectory.csv";
        textio::write_file(art.csv_path,
                           trajectory_csv(records, built.spec.depth,
                                          extra_columns(cfg.probes.metrics)));
    }
    if (has_format(cfg.output, "json")) {
        art.summary_path = art.dir + "/summary.json";
        const nlohmann::json s = summary_json(cfg, built, records, eta_cap, art.diverged,
                                              art.divergence_step);
        textio::write_file(art.summary_path, s.dump(2) + "\n");
    }
    return art;
}

SweepArtifacts run_sweep(const SweepSpec& spec, const std::string& out_dir,
                         std::size_t workers) {
    const std::string root =
        !out_dir.empty()
            ? out_dir
            : (!spec.base.output.dir.empty() ? spec.base.output.dir : default_output_root());
    fs::create_directories(root);

    std::size_t cells = 1;
    for (const auto& axis : spec.axes) cells *= axis.values.size();

    SweepArtifacts art;
    art.cells.resize(cells);

    const auto run_cell = [&](std::size_t cell) {
        SweepCellResult& res = art.cells[cell];
        res.cell = cell;
        char name[32];
        std::snprintf(name, sizeof(name), "cell_%03zu", cell);
        res.dir = root + "/" + name;

        ExperimentConfig cfg = spec.base;
        std::size_t rest = cell;
        for (const auto& axis : spec.axes) {
            const std::size_t pick = rest % axis.values.size();
            rest /= axis.values.size();
            res.axis_values.push_back(axis.values[pick]);
            apply_config_key(cfg, axis.key, axis.values[pick], "sweep axis");
        }

        std::vector<double> losses, irrel1, steps_thr;
        bool any_diverged = false;
        res.status = "ok";
        for (std::uint64_t seed : spec.seeds) {
            ExperimentConfig rep_cfg = cfg;
            apply_replicate_seed(rep_cfg, seed);
            const std::string rep_dir = res.dir + "/rep_" + std::to_string(seed);
            try {
                const RunArtifacts run = run_experiment(rep_cfg, rep_dir);
                if (run.diverged) {
                    any_diverged = true;
                    continue;
                }
                ++res.completed;
                losses.push_back(run.final_loss);
                const auto& recs = run.trajectory;
                if (!recs.empty() && !recs.front().irrel_norm_per_layer.empty()) {
                    irrel1.push_back(recs.back().irrel_norm_per_layer[0]);
                    const double initial = recs.front().irrel_norm_per_layer[0];
                    const double threshold = spec.fit_threshold * initial;
                    if (initial > 0.0) {
                        for (const auto& rec : recs) {
                            if (rec.irrel_norm_per_layer[0] < threshold) {
                                ++res.reached;
                                steps_thr.push_back(static_cast<double>(rec.step));
                                break;
                            }
                        }
                    }
                }
            } catch (const std::exception& e) {
                res.status = std::string("error: ") + e.what();
                break;
            }
        }
        if (res.status == "ok" && any_diverged) res.status = "diverged";
        if (!losses.empty()) res.median_final_loss = median_of(losses);
        if (!irrel1.empty()) res.median_final_irrel1 = median_of(irrel1);
        if (!steps_thr.empty()) res.median_steps_to_threshold = median_of(steps_thr);
    };

    const std::size_t pool = std::max<std::size_t>(1, std::min(workers, cells));
    if (pool <= 1) {
        for (std::size_t c = 0; c < cells; ++c) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (std::size_t t = 0; t < pool; ++t)
            threads.emplace_back([&] {
                while (true) {
                    const std::size_t c = next.fetch_add(1);
                    if (c >= cells) break;
                    run_cell(c);
                }
            });
        for (auto& t : threads) t.join();
    }

    // Aggregate, one row per cell in cell order.
    std::string csv = "cell";
    for (const auto& axis : spec.axes) csv += "," + axis.key;
    csv += ",replicates,completed,reached,status,median_final_loss,"
           "median_final_irrel_norm_l1,median_steps_to_threshold\n";
    for (const auto& res : art.cells) {
        csv += std::to_string(res.cell);
        for (const auto& v : res.axis_values) csv += "," + v;
        csv += "," + std::to_string(spec.seeds.size());
        csv += "," + std::to_string(res.completed);
        csv += "," + std::to_string(res.reached);
        csv += "," + res.status;
        csv += ",";
        if (res.median_final_loss) csv += fmt17(*res.median_final_loss);
        csv += ",";
        if (res.median_final_irrel1) csv += fmt17(*res.median_final_irrel1);
        csv += ",";
        if (res.median_steps_to_threshold) csv += fmt17(*res.median_steps_to_threshold);
        csv += "\n";
        if (res.status != "ok") art.any_failed = true;
    }
    art.aggregate_path = root + "/aggregate.csv";
    textio::write_file(art.aggregate_path, csv);

    if (spec.fit == "scaling") {
        std::size_t eta_axis = 0, b_axis = 0;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            if (spec.axes[a].key == "optimizer.eta") eta_axis = a;
            if (spec.axes[a].key == "optimizer.batch_size") b_axis = a;
        }
        std::vector<ScalingPoint> points;
        for (const auto& res : art.cells) {
            ScalingPoint p;
            p.eta = std::strtod(res.axis_values[eta_axis].c_str(), nullptr);
            p.b = std::strtod(res.axis_values[b_axis].c_str(), nullptr);
            p.reached = res.status == "ok" && res.reached == spec.seeds.size() &&
                        res.median_steps_to_threshold.has_value();
            p.steps = p.reached ? *res.median_steps_to_threshold : 0.0;
            points.push_back(p);
        }
        art.fit_path = root + "/scaling_fit.json";
        nlohmann::json f;
        try {
            const ScalingFit fit = scaling_fit(points);
            f["slope"] = fit.slope;
            f["intercept"] = fit.intercept;
            f["r2"] = fit.r2;
            f["used"] = fit.used.size();
            f["excluded"] = fit.excluded;
            art.fit = fit;
        } catch (const std::exception& e) {
            f["error"] = e.what();
        }
        textio::write_file(art.fit_path, f.dump(2) + "\n");
    }
    return art;
}

}  // namespace sgdlab
