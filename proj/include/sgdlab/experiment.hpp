#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgdlab/config.hpp"
#include "sgdlab/dataset.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/network.hpp"
#include "sgdlab/optimizer.hpp"

namespace sgdlab {

// Everything a single run needs, materialized from a validated config.
struct BuiltExperiment {
    Dataset ds;
    NetworkSpec spec;
    NetworkState net;
    OptimizerConfig opt;
    std::vector<std::size_t> irrelevant_columns;  // resolved probes.irrelevant
};

Dataset build_dataset(const DatasetConfig& cfg);
BuiltExperiment build_experiment(const ExperimentConfig& cfg);

// $SGDLAB_OUT when set, otherwise "out".
std::string default_output_root();

struct RunArtifacts {
    std::string dir;
    std::string csv_path;      // empty when csv is not in output.formats
    std::string summary_path;  // empty when json is not in output.formats
    bool diverged = false;
    std::size_t divergence_step = 0;
    std::size_t records = 0;
    double final_loss = 0.0;  // NaN when there are no records
    std::vector<TrajectoryRecord> trajectory;
};

// Runs the config and writes trajectory.csv / summary.json into out_dir
// (created if needed; empty picks output.dir, then the default root).
// Divergence still writes the partial trajectory and summary and returns
// with diverged = true; the caller decides the exit code.
RunArtifacts run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

struct SweepCellResult {
    std::size_t cell = 0;
    std::string dir;
    std::vector<std::string> axis_values;     // one per axis, file order
    std::string status;                       // ok | diverged | error: <what>
    std::size_t completed = 0;                // replicates that finished
    std::size_t reached = 0;                  // replicates that hit the norm threshold
    std::optional<double> median_final_loss;  // over completed replicates
    std::optional<double> median_final_irrel1;
    std::optional<double> median_steps_to_threshold;  // over reached replicates
};

struct SweepArtifacts {
    std::vector<SweepCellResult> cells;
    std::string aggregate_path;
    std::string fit_path;  // empty unless fit = scaling
    std::optional<ScalingFit> fit;
    bool any_failed = false;
};

// Runs every cartesian cell x replicate on a bounded worker pool. Each cell
// owns out_dir/cell_<index>/rep_<seed>/; the aggregate CSV (and the scaling
// fit, when requested) is written once after all cells finish.
SweepArtifacts run_sweep(const SweepSpec& spec, const std::string& out_dir,
                         std::size_t workers);

}  // namespace sgdlab
