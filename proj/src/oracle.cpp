#include "sgdlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgdlab {

namespace {

Mat tail_gram(const NetworkState& net, const NetworkSpec& spec) {
    const Mat wt = tail_product(net, spec);
    return transpose(wt) * wt;
}

// Largest diagonal magnitude, used to scale alignment tolerances.
double diag_scale(const Mat& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) s = std::max(s, std::abs(m(i, i)));
    return std::max(s, 1e-300);
}

void require_linear(const NetworkSpec& spec, const char* who) {
    if (spec.activation != Activation::Identity)
        throw std::invalid_argument(std::string(who) + ": requires identity activation");
}

void require_diagonal_matrix(const Mat& m, double rel_tol, const char* what) {
    const double bound = rel_tol * diag_scale(m);
    for (std::size_t a = 0; a < m.rows(); ++a)
        for (std::size_t b = 0; b < m.cols(); ++b)
            if (a != b && std::abs(m(a, b)) > bound)
                throw std::invalid_argument(std::string(what) +
                                            ": off-diagonal entries exceed tolerance");
}

std::vector<double> chain_weights(const NetworkState& net, const NetworkSpec& spec,
                                  std::size_t component, const char* who) {
    if (spec.topology != Topology::Diagonal)
        throw std::invalid_argument(std::string(who) + ": requires a diagonal network");
    require_linear(spec, who);
    std::vector<double> theta(spec.depth);
    for (std::size_t l = 0; l < spec.depth; ++l) {
        if (component >= net.weights[l].rows())
            throw std::invalid_argument(std::string(who) + ": component out of range");
        theta[l] = net.weights[l](component, 0);
    }
    return theta;
}

}  // namespace

ShrinkagePrediction predict_gd_multiplier(const NetworkState& net, const NetworkSpec& spec,
                                          const RelevanceDecomposition& dec, double eta,
                                          std::size_t i, std::size_t j) {
    require_linear(spec, "predict_gd_multiplier");
    const Mat& w1 = net.weights[0];
    if (i >= w1.rows()) throw std::invalid_argument("predict_gd_multiplier: row out of range");
    if (j < dec.r || j >= dec.lambda_xx.rows())
        throw std::invalid_argument("predict_gd_multiplier: j must index an irrelevant direction");

    const Mat m = tail_gram(net, spec);
    require_diagonal_matrix(m, 1e-8, "predict_gd_multiplier: tail Gram matrix");

    // The per-entry factor needs column j of the second-moment matrix to be
    // supported on its own diagonal only; otherwise other directions leak in.
    const Mat& lxx = dec.lambda_xx;
    const double bound = 1e-8 * diag_scale(lxx);
    for (std::size_t c = 0; c < lxx.rows(); ++c)
        if (c != j && std::abs(lxx(c, j)) > bound)
            throw std::invalid_argument(
                "predict_gd_multiplier: second-moment column mixes directions");

    ShrinkagePrediction p;
    p.i = i;
    p.j = j;
    p.a = m(i, i);
    p.second_moment = lxx(j, j);
    p.gd_factor = 1.0 - eta * p.a * p.second_moment;
    p.sgd_extra = 0.0;
    return p;
}

Mat sufficient_stat_gd_step(const NetworkState& net, const NetworkSpec& spec,
                            const RelevanceDecomposition& dec, double eta) {
    require_linear(spec, "sufficient_stat_gd_step");
    const std::size_t d = dec.lambda_xx.rows();
    const std::size_t r = dec.r;
    const Mat w1 = dense_weight(net, spec, 1);
    if (w1.cols() != d)
        throw std::invalid_argument("sufficient_stat_gd_step: input width mismatch");
    const std::size_t q = d - r;  // irrelevant directions (spanned + unspanned)

    // First-layer weights expressed in the decomposition basis.
    const Mat w1b = w1 * dec.basis;
    const Mat m = tail_gram(net, spec);

    Mat w1_rel(w1b.rows(), r), w1_irr(w1b.rows(), q);
    for (std::size_t a = 0; a < w1b.rows(); ++a) {
        for (std::size_t c = 0; c < r; ++c) w1_rel(a, c) = w1b(a, c);
        for (std::size_t c = 0; c < q; ++c) w1_irr(a, c) = w1b(a, r + c);
    }
    Mat lxx_ii(q, q), lxx_ri(r, q);
    for (std::size_t a = 0; a < q; ++a)
        for (std::size_t c = 0; c < q; ++c) lxx_ii(a, c) = dec.lambda_xx(r + a, r + c);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t c = 0; c < q; ++c) lxx_ri(a, c) = dec.lambda_xx(a, r + c);

    Mat delta = m * (w1_irr * lxx_ii) + m * (w1_rel * lxx_ri);
    return -eta * delta;
}

TwoStepProducts two_step_cancellation(double alpha, double delta) {
    TwoStepProducts out;
    out.sgd_product = (1.0 - alpha + delta) * (1.0 - alpha - delta);
    out.gd_product = (1.0 - alpha) * (1.0 - alpha);
    return out;
}

ToyRates toy_two_step_rates(double eta, double a) {
    const double a2 = a * a;
    ToyRates out;
    out.gd_rate = (1.0 - 5.0 * eta * a2) * (1.0 - 5.0 * eta * a2);
    out.sgd_rate = (1.0 - eta * a2) * (1.0 - 9.0 * eta * a2);
    return out;
}

double residual_variance_bound(const Dataset& ds, std::size_t b) {
    if (ds.d() != 1 || ds.k() != 1)
        throw std::invalid_argument(
            "residual_variance_bound: requires scalar-input scalar-output data");
    if (b == 0) throw std::invalid_argument("residual_variance_bound: batch size must be >= 1");
    const std::size_t n = ds.n();
    if (n == 0) throw std::invalid_argument("residual_variance_bound: empty dataset");
    double e_y2x2 = 0.0, e_yx = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const double x = ds.X(s, 0);
        const double y = ds.Y(s, 0);
        e_y2x2 += y * y * x * x;
        e_yx += y * x;
    }
    e_y2x2 /= static_cast<double>(n);
    e_yx /= static_cast<double>(n);
    const double r = e_y2x2 - e_yx * e_yx;
    return r / static_cast<double>(b);
}

BalancednessState balancedness_state(const NetworkState& net, const NetworkSpec& spec,
                                     std::size_t component, std::size_t level) {
    std::vector<double> theta = chain_weights(net, spec, component, "balancedness_state");
    if (level == 0 || level > spec.depth)
        throw std::invalid_argument("balancedness_state: level must be in [1, depth]");
    std::sort(theta.begin(), theta.end());

    BalancednessState st;
    st.component = component;
    st.level = level;
    std::vector<double> cur = theta;
    for (std::size_t lv = 2; lv <= level; ++lv) {
        const double head = cur.front();
        std::vector<double> next;
        next.reserve(cur.size() - 1);
        for (std::size_t idx = 1; idx < cur.size(); ++idx)
            next.push_back(cur[idx] * cur[idx] - head * head);
        cur = std::move(next);
    }
    st.values = std::move(cur);
    return st;
}

std::vector<double> balancedness_gaps(const NetworkState& net, const NetworkSpec& spec,
                                      std::size_t component) {
    const std::vector<double> theta = chain_weights(net, spec, component, "balancedness_gaps");
    std::vector<double> gaps(theta.size() - 1);
    for (std::size_t l = 0; l + 1 < theta.size(); ++l)
        gaps[l] = theta[l + 1] * theta[l + 1] - theta[l] * theta[l];
    return gaps;
}

std::vector<double> balancedness_update(const std::vector<double>& gaps,
                                        const NetworkState& net, const NetworkSpec& spec,
                                        const Batch& batch, std::size_t component,
                                        double eta) {
    const std::vector<double> theta = chain_weights(net, spec, component, "balancedness_update");
    const std::size_t depth = theta.size();
    if (gaps.size() != depth - 1)
        throw std::invalid_argument("balancedness_update: expected one gap per adjacent pair");
    if (batch.rows.empty()) throw std::invalid_argument("balancedness_update: empty batch");
    if (component >= batch.X->cols() || component >= batch.Y->cols())
        throw std::invalid_argument("balancedness_update: component out of data range");

    double coef = 1.0;
    for (double t : theta) coef *= t;
    double ex2 = 0.0, eyx = 0.0;
    for (std::size_t s : batch.rows) {
        const double x = (*batch.X)(s, component);
        const double y = (*batch.Y)(s, component);
        ex2 += x * x;
        eyx += y * x;
    }
    ex2 /= static_cast<double>(batch.rows.size());
    eyx /= static_cast<double>(batch.rows.size());
    const double eps = coef * ex2 - eyx;

    std::vector<double> out(gaps.size());
    for (std::size_t l = 0; l + 1 < depth; ++l) {
        double rest = 1.0;  // product of all chain weights except the pair
        for (std::size_t h = 0; h < depth; ++h)
            if (h != l && h != l + 1) rest *= theta[h];
        out[l] = gaps[l] * (1.0 - eta * eta * rest * rest * eps * eps);
    }
    return out;
}

ConvergenceForecast convergence_forecast(double b, double eta, double r_j, double g0_norm,
                                         double delta1, double delta2, std::size_t level) {
    if (!(b >= 1.0)) throw std::invalid_argument("convergence_forecast: b must be >= 1");
    if (!(eta > 0.0) || !(r_j > 0.0) || !(g0_norm > 0.0))
        throw std::invalid_argument("convergence_forecast: eta, r_j, g0_norm must be positive");
    if (!(delta1 > 0.0 && delta1 < 1.0) || !(delta2 > 0.0 && delta2 < 1.0))
        throw std::invalid_argument("convergence_forecast: deltas must lie in (0, 1)");
    if (level < 2) throw std::invalid_argument("convergence_forecast: level must be >= 2");

    ConvergenceForecast f;
    f.b = b;
    f.eta = eta;
    f.r_j = r_j;
    f.g0_norm = g0_norm;
    f.delta1 = delta1;
    f.delta2 = delta2;
    f.level = level;
    if (level == 2) {
        f.t = b / (eta * eta * r_j * r_j) *
              (std::log(g0_norm) - std::log(delta2) - std::log(delta1));
    } else {
        const double c = r_j / std::sqrt(b);
        const double p = std::pow(2.0, static_cast<double>(level - 1));
        f.t = std::pow(1.0 / (eta * c), p) *
              (p * std::log(g0_norm) - 2.0 * p * std::log(delta1) - std::log(delta2));
    }
    return f;
}

}  // namespace sgdlab
