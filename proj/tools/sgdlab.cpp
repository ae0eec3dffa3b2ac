// Command-line front end: configure and run single training experiments,
// parameter sweeps, the self-verification suites, and SVG renderings of the
// CSV artifacts.
//
// Exit codes: 0 success, 1 verification checks failed, 2 configuration or
// usage error, 3 divergence or failed sweep cells.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgdlab/config.hpp"
#include "sgdlab/experiment.hpp"
#include "sgdlab/svg_plot.hpp"
#include "sgdlab/verify.hpp"
#include "textio.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::int64_t seed_override, std::int64_t stride_override) {
    sgdlab::ExperimentConfig cfg = sgdlab::load_experiment_config(config_path);
    if (seed_override >= 0)
        sgdlab::apply_replicate_seed(cfg, static_cast<std::uint64_t>(seed_override));
    if (stride_override > 0)
        cfg.probes.stride = static_cast<std::size_t>(stride_override);
    sgdlab::validate_experiment_config(cfg, config_path);

    const sgdlab::RunArtifacts art = sgdlab::run_experiment(cfg, out_dir);
    std::fprintf(stderr, "run: %zu records, final loss %.6g%s\n", art.records,
                 art.final_loss,
                 art.diverged ? " (DIVERGED: loss became non-finite)" : "");
    std::printf("%s\n", art.dir.c_str());
    return art.diverged ? 3 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              std::size_t workers, std::int64_t seed_override) {
    sgdlab::SweepSpec spec = sgdlab::load_sweep_spec(config_path);
    if (seed_override >= 0) spec.seeds = {static_cast<std::uint64_t>(seed_override)};

    const sgdlab::SweepArtifacts art = sgdlab::run_sweep(spec, out_dir, workers);
    for (const auto& cell : art.cells) {
        std::string axes;
        for (std::size_t a = 0; a < cell.axis_values.size(); ++a)
            axes += " " + spec.axes[a].key + "=" + cell.axis_values[a];
        std::fprintf(stderr, "cell %03zu:%s -> %s\n", cell.cell, axes.c_str(),
                     cell.status.c_str());
    }
    if (art.fit)
        std::fprintf(stderr,
                     "scaling fit: slope %.4f, intercept %.4f, r2 %.4f (%zu points "
                     "used, %zu excluded)\n",
                     art.fit->slope, art.fit->intercept, art.fit->r2, art.fit->used.size(),
                     art.fit->excluded);
    std::printf("%s\n", art.aggregate_path.c_str());
    return art.any_failed ? 3 : 0;
}

int cmd_verify(const std::vector<std::string>& requested) {
    std::vector<std::string> suites = requested;
    if (suites.empty() || (suites.size() == 1 && suites[0] == "all"))
        suites = sgdlab::verify_suite_names();

    std::vector<sgdlab::VerifyReport> reports;
    bool any_fail = false;
    for (const auto& name : suites) {
        const sgdlab::VerifyReport rep = sgdlab::run_verify_suite(name);
        for (const auto& c : rep.checks)
            std::fprintf(stderr, "[%s] %s/%s: value %.6g vs bound %.6g\n",
                         c.pass ? " ok " : "FAIL", rep.suite.c_str(), c.name.c_str(),
                         c.value, c.bound);
        any_fail = any_fail || !rep.all_pass;
        reports.push_back(rep);
    }
    std::string out = "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (i) out += ",\n";
        out += sgdlab::verify_report_json(reports[i]);
    }
    out += "\n]\n";
    std::fputs(out.c_str(), stdout);
    return any_fail ? 1 : 0;
}

int cmd_plot(const std::string& kind_name, const std::vector<std::string>& inputs,
             const std::string& out_path, const std::vector<std::string>& labels) {
    const sgdlab::PlotKind kind = sgdlab::parse_plot_kind(kind_name);
    const std::string svg = sgdlab::render_plot(kind, inputs, labels);
    sgdlab::textio::write_file(out_path, svg);
    std::printf("%s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "training-dynamics laboratory: first-layer support identification in deep "
        "linear, diagonal, and piecewise-linear networks"};
    app.require_subcommand(1);

    std::string config_path, out_dir, plot_kind, plot_out;
    std::vector<std::string> verify_suites, plot_inputs, plot_labels;
    std::int64_t seed_override = -1, stride_override = 0;
    std::size_t workers = 0;

    CLI::App* run = app.add_subcommand("run", "train one configuration and write "
                                              "trajectory.csv / summary.json");
    run->add_option("--config", config_path, "experiment config (flat key=value or JSON)")
        ->required();
    run->add_option("--out", out_dir, "output directory (default: config, then "
                                      "$SGDLAB_OUT, then ./out)");
    run->add_option("--seed-override", seed_override,
                    "re-seed the optimizer (and network, derived) for replicates");
    run->add_option("--stride", stride_override, "record every N steps");

    CLI::App* sweep = app.add_subcommand("sweep", "run a grid of configurations and "
                                                  "aggregate the results");
    sweep->add_option("--config", config_path, "sweep config with axis.* entries")
        ->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--workers", workers, "worker threads (default: hardware)");
    sweep->add_option("--seed-override", seed_override,
                      "replace the replicate seed list with this single seed");

    CLI::App* verify = app.add_subcommand(
        "verify", "run self-check suites against closed-form predictions");
    verify->add_option("suites", verify_suites,
                       "suite names (default: all). Known: theorem1, prop1, prop1a, "
                       "propGD, two-step, balancedness, weight-decay, gradcheck, "
                       "relu-counterexample");

    CLI::App* plot = app.add_subcommand("plot", "render CSV artifacts to SVG");
    plot->add_option("--kind", plot_kind,
                     "norm-curves | gram-heatmap | eigen-histogram | landscape-2d")
        ->required();
    plot->add_option("inputs", plot_inputs, "input CSV file(s)")->required();
    plot->add_option("--out", plot_out, "output SVG path")->required();
    plot->add_option("--label", plot_labels, "curve label (repeatable, input order)");

    CLI::App* reference = app.add_subcommand(
        "reference", "print every config key with its default and meaning");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(config_path, out_dir, seed_override, stride_override);
        if (*sweep) return cmd_sweep(config_path, out_dir, workers, seed_override);
        if (*verify) return cmd_verify(verify_suites);
        if (*plot) return cmd_plot(plot_kind, plot_inputs, plot_out, plot_labels);
        if (*reference) {
            std::fputs(sgdlab::config_reference().c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
