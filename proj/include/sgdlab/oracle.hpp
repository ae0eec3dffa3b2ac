#pragma once

#include <cstddef>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/network.hpp"

namespace sgdlab {

// Closed-form predictors of the training dynamics, kept strictly separate
// from the simulator so the two can be compared as independent routes.

struct ShrinkagePrediction {
    std::size_t i = 0;           // first-layer row (unit index)
    std::size_t j = 0;           // input direction, in decomposition order
    double a = 0.0;              // (W_L...W_2)^T (W_L...W_2) [i,i]
    double second_moment = 0.0;  // E[x_j^2]
    double gd_factor = 1.0;      // 1 - eta * a * second_moment
    // The SGD second-order excess is measured, not derived: the constant
    // tied to fourth moments has no closed form here. Filled by the
    // measurement path (see empirical_shrink_excess), 0 from the predictor.
    double sgd_extra = 0.0;
};

// Per-entry multiplier applied by one full-batch GD step to an irrelevant
// first-layer entry. Requires identity activation, weights aligned with the
// decomposition basis (tail Gram matrix diagonal), and data whose lambda_xx
// column j is diagonal at machine precision; each is validated.
ShrinkagePrediction predict_gd_multiplier(const NetworkState& net, const NetworkSpec& spec,
                                          const RelevanceDecomposition& dec, double eta,
                                          std::size_t i, std::size_t j);

// Predicted GD update of W_1's irrelevant block, from second moments only:
// -eta*M*W1[:,r:]*Lxx[r:,r:] - eta*M*W1[:,:r]*Lxx[:r,r:], M the tail Gram
// matrix, everything expressed in the decomposition basis.
Mat sufficient_stat_gd_step(const NetworkState& net, const NetworkSpec& spec,
                            const RelevanceDecomposition& dec, double eta);

struct TwoStepProducts {
    double sgd_product = 0.0;  // (1-alpha+delta)(1-alpha-delta)
    double gd_product = 0.0;   // (1-alpha)^2
};

TwoStepProducts two_step_cancellation(double alpha, double delta);

struct ToyRates {
    double gd_rate = 0.0;   // (1-5*eta*a^2)^2
    double sgd_rate = 0.0;  // (1-eta*a^2)(1-9*eta*a^2)
};

ToyRates toy_two_step_rates(double eta, double a);

// R/b with R = E[y^2 x^2] - E[yx]^2, for scalar-in scalar-out data. Lower
// bound on the variance of batch residuals under uniform with-replacement
// batch sampling.
double residual_variance_bound(const Dataset& ds, std::size_t b);

struct BalancednessState {
    std::size_t component = 0;  // diagonal component j
    std::size_t level = 1;
    std::vector<double> values;
};

// Level 1: the chain weights theta_1..theta_L themselves (sorted ascending).
// Level 2: theta_i^2 - theta_1^2 for i = 2..L. Level j: the recursion
// G_i^j = (G_i^{j-1})^2 - (G_{j-1}^{j-1})^2.
BalancednessState balancedness_state(const NetworkState& net, const NetworkSpec& spec,
                                     std::size_t component, std::size_t level);

// Adjacent-layer gaps G_i = W_{i+1}[j,j]^2 - W_i[j,j]^2 for i = 1..L-1.
std::vector<double> balancedness_gaps(const NetworkState& net, const NetworkSpec& spec,
                                      std::size_t component);

// Predicted gaps after one step on `batch`: each G_i picks up the factor
// 1 - eta^2 * (prod_{h not in {i,i+1}} W_h[j,j])^2 * eps_B^2, where
// eps_B = (prod_h W_h[j,j]) E_B[x_j^2] - E_B[y_j x_j]. Exact for the
// multiplicative step, so the O(eta^3) contract is met with margin.
std::vector<double> balancedness_update(const std::vector<double>& gaps,
                                        const NetworkState& net, const NetworkSpec& spec,
                                        const Batch& batch, std::size_t component,
                                        double eta);

struct ConvergenceForecast {
    double t = 0.0;
    double b = 0.0;
    double eta = 0.0;
    double r_j = 0.0;
    double g0_norm = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    std::size_t level = 2;
};

// Unit-constant formula value, meaningful only as ratios between
// configurations. Level 2: b/(eta^2 R^2) * (log G0 - log d2 - log d1).
// Level i >= 3: (1/(eta*c)^(2^(i-1))) * (2^(i-1) log G0 - 2^i log d1
// - log d2) with c = R/sqrt(b).
ConvergenceForecast convergence_forecast(double b, double eta, double r_j, double g0_norm,
                                         double delta1, double delta2, std::size_t level);

}  // namespace sgdlab
