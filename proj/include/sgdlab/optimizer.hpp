#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/network.hpp"

namespace sgdlab {

enum class Algorithm { Gd, SgdWith, SgdWithout };

struct OptimizerConfig {
    Algorithm algorithm = Algorithm::Gd;
    double eta = 0.0;
    std::size_t batch_size = 1;
    double weight_decay = 0.0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
};

struct BatchSchedule {
    std::vector<std::vector<std::size_t>> batches;
};

// Reported instead of infinity when the estimated curvature is zero (or
// below the finite-difference noise floor).
inline constexpr double kEtaMaxCap = 1e9;

// 2 / (lambda_max(H) + lambda), H the full-batch loss Hessian at the current
// weights, estimated by power iteration over central-finite-difference
// Hessian-vector products. A negative dominant value triggers one shifted
// re-run so the signed largest eigenvalue is returned.
double eta_max(const NetworkState& net, const NetworkSpec& spec, const Dataset& ds,
               double lambda);

// gd: every step is the full index set. sgd-without: fresh seeded shuffle
// per epoch, chopped into batches, short final batch kept. sgd-with: an
// independent uniformly sampled size-b subset per step.
BatchSchedule make_schedule(const OptimizerConfig& cfg, std::size_t n);

// One update: w <- (1 - eta*lambda) * w - eta * grad. Algebraically the
// usual theta - eta*(grad + lambda*theta), written so that a zero-gradient
// weight decays by exactly (1 - eta*lambda) per step.
void step(NetworkState& net, const NetworkSpec& spec, const Batch& batch, double eta,
          double lambda);

struct TrajectoryRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::vector<double> irrel_norm_per_layer;
    std::vector<std::pair<std::string, double>> extras;
};

struct RunProbes {
    std::size_t stride = 1;
    // Ground-truth irrelevant first-layer columns; empty leaves norms off.
    std::vector<std::size_t> irrelevant_columns;
    // Compute eta_max up front and warn on stderr when cfg.eta exceeds it.
    bool check_eta_max = false;
    std::function<void(std::size_t, const NetworkState&, TrajectoryRecord&)> extra;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t at_step, const std::string& what,
                    std::vector<TrajectoryRecord> partial_records = {})
        : std::runtime_error(what), step(at_step), partial(std::move(partial_records)) {}
    std::size_t step;
    std::vector<TrajectoryRecord> partial;  // records gathered before the abort
};

// Runs cfg.steps updates in place. Records carry the batch loss and gradient
// norm seen at the pre-update state, every `stride` steps; one final record
// at step == cfg.steps evaluates the full dataset. steps == 0 returns an
// empty trajectory. Non-finite loss aborts with DivergenceError.
std::vector<TrajectoryRecord> run_training(NetworkState& net, const NetworkSpec& spec,
                                           const Dataset& ds, const OptimizerConfig& cfg,
                                           const RunProbes& probes = {});

}  // namespace sgdlab
