#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/linalg.hpp"

namespace sgdlab {

enum class Activation { Identity, Relu };
enum class Topology { Dense, Diagonal };

struct NetworkSpec {
    std::size_t depth = 0;              // L
    std::vector<std::size_t> widths;    // input d, hidden..., output k (L+1 entries)
    Activation activation = Activation::Identity;
    Topology topology = Topology::Dense;

    std::size_t input_width() const { return widths.front(); }
    std::size_t output_width() const { return widths.back(); }

    void validate() const;

    static NetworkSpec dense(std::vector<std::size_t> widths, Activation act);
    static NetworkSpec diagonal(std::size_t depth, std::size_t width, Activation act);
};

// Dense layers hold full matrices; diagonal layers hold a width x 1 column
// of diagonal entries. Use dense_weight() when the full matrix is needed.
struct NetworkState {
    std::vector<Mat> weights;
};

struct ActivationMasks {
    // One 0/1 vector per hidden layer (layers 1..L-1).
    std::vector<std::vector<double>> layer;
};

struct Gradients {
    std::vector<Mat> g;
};

struct InitScheme {
    enum class Kind { KaimingNormal, KaimingUniform, IidNormal, Explicit };
    Kind kind = Kind::KaimingNormal;
    double scale = 1.0;
    std::vector<Mat> weights;

    static InitScheme kaiming_normal() { return {Kind::KaimingNormal, 1.0, {}}; }
    static InitScheme kaiming_uniform() { return {Kind::KaimingUniform, 1.0, {}}; }
    static InitScheme iid_normal(double scale) { return {Kind::IidNormal, scale, {}}; }
    static InitScheme explicit_weights(std::vector<Mat> w) {
        return {Kind::Explicit, 1.0, std::move(w)};
    }
};

NetworkState init(const NetworkSpec& spec, const InitScheme& scheme, std::uint64_t seed);

struct ForwardResult {
    std::vector<double> output;
    ActivationMasks masks;
};

ForwardResult forward(const NetworkState& net, const NetworkSpec& spec,
                      const std::vector<double>& x);

// Rows of (x, y) referenced by index; the data itself is not copied.
struct Batch {
    const Mat* X = nullptr;
    const Mat* Y = nullptr;
    std::vector<std::size_t> rows;
};

Batch full_batch(const Dataset& ds);
Batch batch_of(const Dataset& ds, std::vector<std::size_t> rows);

struct BackwardResult {
    Gradients grads;
    double loss = 0.0;
};

// Loss = (1/2n) sum of squared residuals over the batch; gradients are the
// batch average. ReLU layers use the forward masks (subgradient 0 at 0).
BackwardResult backward_mse(const NetworkState& net, const NetworkSpec& spec,
                            const Batch& batch);

double dataset_loss(const NetworkState& net, const NetworkSpec& spec, const Dataset& ds);

// Full matrix of layer l (1-based), expanding diagonals.
Mat dense_weight(const NetworkState& net, const NetworkSpec& spec, std::size_t l);

// W_L * ... * W_2, the tail the first layer feeds into. Identity for L = 1.
Mat tail_product(const NetworkState& net, const NetworkSpec& spec);

// Per-layer norms of the weights tied to the given irrelevant input columns.
// Layer 1: Frobenius norm of those columns. Deeper layers: diagonal nets
// restrict to the same components; dense layers have no input-aligned split
// above layer 1, so the full Frobenius norm is reported there.
std::vector<double> per_layer_irrelevant_norms(const NetworkState& net,
                                               const NetworkSpec& spec,
                                               const std::vector<std::size_t>& columns);

void save_checkpoint(const NetworkState& net, const NetworkSpec& spec,
                     const std::string& path);

struct Checkpoint {
    NetworkSpec spec;
    NetworkState net;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace sgdlab
