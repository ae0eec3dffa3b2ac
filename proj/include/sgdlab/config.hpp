#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgdlab {

// Raised for any malformed, unknown, or out-of-range configuration input.
// Messages carry the origin (file path or label), the line number for the
// text format, and the offending key, so typos are never silently ignored.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Experiment configuration blocks. Every field below has the default shown
// here; config files only need the keys they want to change.
// ---------------------------------------------------------------------------

struct DatasetConfig {
    // synthetic | diag-misspec | toy | idx
    std::string source = "synthetic";
    std::size_t d = 8;                 // input width (synthetic, diag-misspec)
    std::size_t r = 2;                 // relevant coordinates (first r columns)
    std::size_t m = 64;                // base sample count
    std::string target = "linear-sum"; // synthetic labels: linear-sum | sine-of-sum
    double eps = 0.0;                  // synthetic paired label perturbation
    double noise = 0.5;                // diag-misspec residual scale on irrelevant comps
    std::uint64_t seed = 1;
    std::string toy = "d1";            // toy variant: d1 | d2
    std::string idx_images;            // idx: image file path
    std::string idx_labels;            // idx: label file path
    bool idx_center = true;            // idx: subtract per-column means
};

struct NetworkConfig {
    std::string topology = "dense";      // dense | diagonal
    std::string activation = "identity"; // identity | relu
    std::vector<std::size_t> widths = {8, 4, 1};  // dense layer widths, input..output
    std::size_t depth = 2;               // diagonal chain length
    std::string init = "kaiming-normal"; // kaiming-normal | kaiming-uniform | iid-normal
    double init_scale = 1.0;             // iid-normal standard deviation
    std::uint64_t seed = 2;
};

struct OptimizerSection {
    std::string algorithm = "gd";  // gd | sgd-with | sgd-without
    double eta = 0.01;
    std::size_t batch_size = 1;
    double weight_decay = 0.0;
    std::size_t steps = 100;
    std::uint64_t seed = 3;
};

struct ProbesConfig {
    std::size_t stride = 1;
    bool check_eta_max = false;
    // Extra per-record metrics; each adds one CSV column. Known names:
    // w1-min-abs, tail-gram-trace, balance-gap, toy-ab.
    std::vector<std::string> metrics;
    // auto (dataset ground truth) | none | comma list of input coordinates.
    std::string irrelevant = "auto";
};

struct OutputConfig {
    std::string dir;  // empty -> SGDLAB_OUT env var, then "out"
    std::vector<std::string> formats = {"csv", "json"};
};

struct ExperimentConfig {
    DatasetConfig dataset;
    NetworkConfig network;
    OptimizerSection optimizer;
    ProbesConfig probes;
    OutputConfig output;
};

// One sweep axis: a dotted config key plus the values it takes, in file order.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

struct SweepSpec {
    ExperimentConfig base;
    std::vector<SweepAxis> axes;
    // Per-replicate seeds; each sets optimizer.seed = s, network.seed = s + 1000003.
    std::vector<std::uint64_t> seeds = {1};
    std::size_t cap = 256;        // max cartesian cell count
    std::string fit = "none";     // none | scaling
    double fit_threshold = 1e-3;  // fraction of the initial first-layer norm
};

// Sets one dotted key ("section.key") on cfg, validating name and value.
// `where` prefixes error messages (e.g. "cfg.txt:12" or "sweep axis").
void apply_config_key(ExperimentConfig& cfg, const std::string& dotted_key,
                      const std::string& value, const std::string& where);

// Parses the flat sectioned key=value text format. `origin` labels errors.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin);
SweepSpec parse_sweep_spec(const std::string& text, const std::string& origin);

// Reads a config file, accepting either the text format or a JSON object
// (detected by a leading '{'). Same for sweeps.
ExperimentConfig load_experiment_config(const std::string& path);
SweepSpec load_sweep_spec(const std::string& path);

// Cross-field checks that need the whole config (width/topology coherence,
// metric applicability, batch size bounds). Parsing already runs this.
void validate_experiment_config(const ExperimentConfig& cfg, const std::string& origin);

// Applies the replicate-seed rule used by sweeps and --seed-override.
void apply_replicate_seed(ExperimentConfig& cfg, std::uint64_t seed);

// Full config echo as a JSON object string (sorted keys, stable bytes).
std::string config_to_json(const ExperimentConfig& cfg);

// The documented key reference: every key, its default, and its meaning.
std::string config_reference();

}  // namespace sgdlab
