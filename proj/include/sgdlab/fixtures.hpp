#pragma once

// Fixture builders shared by the verification suites and the test binaries.
//
// exact_support_dataset: regression data whose irrelevant input columns are
// explicitly orthogonalized against the constant direction, the relevant
// columns, and each other, so the relevant/irrelevant cross moments and the
// irrelevant-block off-diagonals vanish at machine precision instead of at
// the 1/sqrt(n) sampling scale. Columns with scale 0 are exactly zero
// (unspanned directions).
//
// aligned_tail_net: a linear network whose layers above the first are built
// from orthonormal-column factors with the diagonal scaling applied first,
// so the tail Gram matrix (W_L...W_2)^T (W_L...W_2) is diagonal at machine
// precision while the weights themselves stay generic.

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/linalg.hpp"
#include "sgdlab/network.hpp"
#include "sgdlab/rng.hpp"

namespace sgdlab::fixtures {

struct SupportFixtureOptions {
    std::size_t d = 6;
    std::size_t r = 2;
    std::size_t m = 64;               // rows
    std::size_t unspanned = 0;        // trailing exactly-zero columns
    std::size_t outputs = 0;          // label width; 0 means r
    double irrelevant_scale = 1.0;    // E[x_j^2] target for spanned irrelevant
    std::uint64_t seed = 1;
};

inline Dataset exact_support_dataset(const SupportFixtureOptions& opt) {
    const std::size_t q = opt.d - opt.r;             // irrelevant columns
    const std::size_t spanned = q - opt.unspanned;   // nonzero irrelevant columns
    Rng rng(opt.seed);

    Mat x(opt.m, opt.d);
    for (std::size_t s = 0; s < opt.m; ++s)
        for (std::size_t c = 0; c < opt.r; ++c) x(s, c) = rng.normal();

    // [ones | relevant | raw irrelevant] -> orthonormalize; the trailing
    // columns end up orthogonal to everything before them and to each other.
    Mat block(opt.m, 1 + opt.r + spanned);
    for (std::size_t s = 0; s < opt.m; ++s) {
        block(s, 0) = 1.0;
        for (std::size_t c = 0; c < opt.r; ++c) block(s, 1 + c) = x(s, c);
        for (std::size_t c = 0; c < spanned; ++c) block(s, 1 + opt.r + c) = rng.normal();
    }
    const Mat ortho = orthonormalize_columns(block);
    const double col_norm = std::sqrt(static_cast<double>(opt.m)) * opt.irrelevant_scale;
    for (std::size_t s = 0; s < opt.m; ++s)
        for (std::size_t c = 0; c < spanned; ++c)
            x(s, opt.r + c) = col_norm * ortho(s, 1 + opt.r + c);
    // Unspanned columns stay exactly 0.

    // Labels depend on the relevant block only, through a fixed dense map.
    const std::size_t k = opt.outputs == 0 ? opt.r : opt.outputs;
    Mat a(k, opt.r);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < opt.r; ++c) a(i, c) = rng.normal();
    Mat y(opt.m, k);
    for (std::size_t s = 0; s < opt.m; ++s)
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t c = 0; c < opt.r; ++c) acc += a(i, c) * x(s, c);
            y(s, i) = acc;
        }

    Dataset ds;
    ds.X = std::move(x);
    ds.Y = std::move(y);
    std::vector<std::size_t> rel(opt.r);
    for (std::size_t c = 0; c < opt.r; ++c) rel[c] = c;
    ds.ground_truth_relevant = std::move(rel);
    ds.name = "exact-support-fixture";
    return ds;
}

// Widths must be non-decreasing from index 1 on, so every factor above the
// first layer can have orthonormal columns.
inline NetworkState aligned_tail_net(const NetworkSpec& spec, std::uint64_t seed,
                                     double min_abs_w1 = 0.05) {
    Rng rng(seed);
    std::vector<Mat> w(spec.depth);

    w[0] = Mat(spec.widths[1], spec.widths[0]);
    for (std::size_t i = 0; i < w[0].rows(); ++i)
        for (std::size_t j = 0; j < w[0].cols(); ++j) {
            double v = rng.normal();
            while (std::abs(v) < min_abs_w1) v = rng.normal();
            w[0](i, j) = v;
        }

    for (std::size_t l = 1; l < spec.depth; ++l) {
        Mat raw(spec.widths[l + 1], spec.widths[l]);
        for (std::size_t i = 0; i < raw.rows(); ++i)
            for (std::size_t j = 0; j < raw.cols(); ++j) raw(i, j) = rng.normal();
        Mat q = orthonormalize_columns(raw);
        if (l == 1) {
            // Diagonal scaling applied before any rotation keeps the overall
            // tail of the form Q * D, whose Gram matrix is exactly D^2.
            std::vector<double> scale(q.cols());
            for (double& s : scale) s = 0.5 + rng.uniform();
            for (std::size_t i = 0; i < q.rows(); ++i)
                for (std::size_t j = 0; j < q.cols(); ++j) q(i, j) *= scale[j];
        }
        w[l] = std::move(q);
    }

    NetworkState net;
    net.weights = std::move(w);
    return net;
}

}  // namespace sgdlab::testing
