#include "sgdlab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "sgdlab/rng.hpp"

namespace sgdlab {

namespace {

std::vector<double> flatten_weights(const NetworkState& net) {
    std::vector<double> out;
    for (const Mat& w : net.weights)
        out.insert(out.end(), w.data().begin(), w.data().end());
    return out;
}

void unflatten_weights(NetworkState& net, const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (Mat& w : net.weights) {
        std::copy(flat.begin() + pos, flat.begin() + pos + w.data().size(),
                  w.data().begin());
        pos += w.data().size();
    }
}

std::vector<double> flatten_grads(const Gradients& g) {
    std::vector<double> out;
    for (const Mat& m : g.g) out.insert(out.end(), m.data().begin(), m.data().end());
    return out;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

double eta_max(const NetworkState& net, const NetworkSpec& spec, const Dataset& ds,
               double lambda) {
    const Batch batch = full_batch(ds);
    const std::vector<double> theta = flatten_weights(net);
    const std::size_t dim = theta.size();

    NetworkState scratch = net;
    auto grad_at = [&](const std::vector<double>& point) {
        unflatten_weights(scratch, point);
        return flatten_grads(backward_mse(scratch, spec, batch).grads);
    };

    if (!all_finite(grad_at(theta)))
        throw std::runtime_error("eta_max: non-finite gradient at the given weights");

    double theta_norm = 0.0;
    for (double v : theta) theta_norm += v * v;
    theta_norm = std::sqrt(theta_norm);
    const double h = 1e-4 * (1.0 + theta_norm);

    auto hvp = [&](const std::vector<double>& v) {
        std::vector<double> plus(dim), minus(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            plus[i] = theta[i] + h * v[i];
            minus[i] = theta[i] - h * v[i];
        }
        const std::vector<double> gp = grad_at(plus);
        const std::vector<double> gm = grad_at(minus);
        std::vector<double> out(dim);
        for (std::size_t i = 0; i < dim; ++i) out[i] = (gp[i] - gm[i]) / (2.0 * h);
        return out;
    };

    const DominantEig dom = dominant_eigenvalue(hvp, dim, 200, 1e-6);
    double lam_max = dom.value;
    if (lam_max < 0.0) {
        // Dominant magnitude is negative; shift the spectrum to find the
        // signed largest eigenvalue.
        const double shift = -lam_max;
        auto shifted = [&](const std::vector<double>& v) {
            std::vector<double> out = hvp(v);
            for (std::size_t i = 0; i < dim; ++i) out[i] += shift * v[i];
            return out;
        };
        lam_max = dominant_eigenvalue(shifted, dim, 200, 1e-6).value - shift;
    }

    // Curvature below the finite-difference noise floor counts as zero.
    if (std::abs(lam_max) <= 10.0 * h) lam_max = 0.0;

    const double denom = lam_max + lambda;
    if (denom <= 2.0 / kEtaMaxCap) return kEtaMaxCap;
    return std::min(2.0 / denom, kEtaMaxCap);
}

BatchSchedule make_schedule(const OptimizerConfig& cfg, std::size_t n) {
    if (n == 0) throw std::invalid_argument("make_schedule: empty dataset");
    if (!std::isfinite(cfg.eta)) throw std::invalid_argument("make_schedule: eta not finite");
    if (cfg.algorithm != Algorithm::Gd) {
        if (cfg.batch_size == 0) throw std::invalid_argument("make_schedule: batch_size 0");
        if (cfg.batch_size > n)
            throw std::invalid_argument("make_schedule: batch_size " +
                                        std::to_string(cfg.batch_size) + " > n = " +
                                        std::to_string(n));
    }

    BatchSchedule sched;
    sched.batches.reserve(cfg.steps);
    Rng rng(cfg.seed);

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    std::vector<std::size_t> epoch;
    std::size_t cursor = 0;

    for (std::size_t s = 0; s < cfg.steps; ++s) {
        switch (cfg.algorithm) {
            case Algorithm::Gd:
                sched.batches.push_back(all);
                break;
            case Algorithm::SgdWith: {
                // Partial Fisher-Yates: a uniform size-b subset.
                std::vector<std::size_t> pool = all;
                std::vector<std::size_t> pick(cfg.batch_size);
                for (std::size_t i = 0; i < cfg.batch_size; ++i) {
                    const std::size_t j = i + rng.index(n - i);
                    std::swap(pool[i], pool[j]);
                    pick[i] = pool[i];
                }
                sched.batches.push_back(std::move(pick));
                break;
            }
            case Algorithm::SgdWithout: {
                if (cursor == epoch.size()) {
                    epoch = all;
                    for (std::size_t i = n; i > 1; --i)
                        std::swap(epoch[i - 1], epoch[rng.index(i)]);
                    cursor = 0;
                }
                const std::size_t take = std::min(cfg.batch_size, n - cursor);
                sched.batches.emplace_back(epoch.begin() + cursor,
                                           epoch.begin() + cursor + take);
                cursor += take;
                break;
            }
        }
    }
    return sched;
}

void step(NetworkState& net, const NetworkSpec& spec, const Batch& batch, double eta,
          double lambda) {
    const BackwardResult res = backward_mse(net, spec, batch);
    const double keep = 1.0 - eta * lambda;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        auto& w = net.weights[l].data();
        const auto& g = res.grads.g[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = keep * w[i] - eta * g[i];
    }
}

std::vector<TrajectoryRecord> run_training(NetworkState& net, const NetworkSpec& spec,
                                           const Dataset& ds, const OptimizerConfig& cfg,
                                           const RunProbes& probes) {
    spec.validate();
    if (cfg.eta < 0.0 || !std::isfinite(cfg.eta))
        throw std::invalid_argument("run_training: bad eta");
    const std::size_t stride = std::max<std::size_t>(1, probes.stride);

    if (probes.check_eta_max) {
        const double cap = eta_max(net, spec, ds, cfg.weight_decay);
        if (cfg.eta >= cap)
            std::cerr << "run_training: warning: eta " << cfg.eta
                      << " >= eta_max estimate " << cap << "\n";
    }

    std::vector<TrajectoryRecord> records;
    if (cfg.steps == 0) return records;

    const BatchSchedule sched = make_schedule(cfg, ds.n());
    const double keep = 1.0 - cfg.eta * cfg.weight_decay;

    auto make_record = [&](std::size_t s, double loss, double gnorm) {
        TrajectoryRecord rec;
        rec.step = s;
        rec.loss = loss;
        rec.grad_norm = gnorm;
        if (!probes.irrelevant_columns.empty())
            rec.irrel_norm_per_layer =
                per_layer_irrelevant_norms(net, spec, probes.irrelevant_columns);
        if (probes.extra) probes.extra(s, net, rec);
        return rec;
    };

    for (std::size_t s = 0; s < cfg.steps; ++s) {
        const Batch batch = batch_of(ds, sched.batches[s]);
        const BackwardResult res = backward_mse(net, spec, batch);
        if (!std::isfinite(res.loss)) {
            records.push_back(make_record(s, res.loss, 0.0));
            throw DivergenceError(s, "run_training: non-finite loss at step " +
                                         std::to_string(s),
                                  std::move(records));
        }
        if (s % stride == 0) {
            double g2 = 0.0;
            for (const Mat& g : res.grads.g)
                for (double v : g.data()) g2 += v * v;
            records.push_back(make_record(s, res.loss, std::sqrt(g2)));
        }
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            auto& w = net.weights[l].data();
            const auto& g = res.grads.g[l].data();
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] = keep * w[i] - cfg.eta * g[i];
        }
    }

    // Final record evaluates the whole dataset at the end state.
    const BackwardResult fin = backward_mse(net, spec, full_batch(ds));
    if (!std::isfinite(fin.loss))
        throw DivergenceError(cfg.steps, "run_training: non-finite loss after step " +
                                             std::to_string(cfg.steps),
                              std::move(records));
    double g2 = 0.0;
    for (const Mat& g : fin.grads.g)
        for (double v : g.data()) g2 += v * v;
    records.push_back(make_record(cfg.steps, fin.loss, std::sqrt(g2)));
    return records;
}

}  // namespace sgdlab
