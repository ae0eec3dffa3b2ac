#include "sgdlab/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sgdlab/rng.hpp"

namespace sgdlab {

void NetworkSpec::validate() const {
    if (depth < 1) throw std::invalid_argument("network spec: depth must be >= 1");
    if (widths.size() != depth + 1)
        throw std::invalid_argument("network spec: need depth+1 widths, got " +
                                    std::to_string(widths.size()));
    for (std::size_t w : widths)
        if (w == 0) throw std::invalid_argument("network spec: zero width");
    if (topology == Topology::Diagonal)
        for (std::size_t w : widths)
            if (w != widths.front())
                throw std::invalid_argument("network spec: diagonal topology needs equal widths");
}

NetworkSpec NetworkSpec::dense(std::vector<std::size_t> widths, Activation act) {
    NetworkSpec s;
    s.depth = widths.size() - 1;
    s.widths = std::move(widths);
    s.activation = act;
    s.topology = Topology::Dense;
    s.validate();
    return s;
}

NetworkSpec NetworkSpec::diagonal(std::size_t depth, std::size_t width, Activation act) {
    NetworkSpec s;
    s.depth = depth;
    s.widths.assign(depth + 1, width);
    s.activation = act;
    s.topology = Topology::Diagonal;
    s.validate();
    return s;
}

namespace {

std::pair<std::size_t, std::size_t> layer_shape(const NetworkSpec& spec, std::size_t l) {
    if (spec.topology == Topology::Diagonal) return {spec.widths[0], 1};
    return {spec.widths[l], spec.widths[l - 1]};
}

}  // namespace

NetworkState init(const NetworkSpec& spec, const InitScheme& scheme, std::uint64_t seed) {
    spec.validate();
    if (scheme.kind == InitScheme::Kind::Explicit) {
        if (scheme.weights.size() != spec.depth)
            throw std::invalid_argument("init: explicit scheme needs one Mat per layer");
        for (std::size_t l = 1; l <= spec.depth; ++l) {
            const auto [r, c] = layer_shape(spec, l);
            const Mat& w = scheme.weights[l - 1];
            if (w.rows() != r || w.cols() != c)
                throw std::invalid_argument("init: explicit weight " + std::to_string(l) +
                                            " has shape " + std::to_string(w.rows()) + "x" +
                                            std::to_string(w.cols()) + ", expected " +
                                            std::to_string(r) + "x" + std::to_string(c));
        }
        return NetworkState{scheme.weights};
    }

    Rng rng(seed);
    NetworkState net;
    net.weights.reserve(spec.depth);
    for (std::size_t l = 1; l <= spec.depth; ++l) {
        const auto [r, c] = layer_shape(spec, l);
        // Diagonal chains have one input per unit.
        const double fan_in = (spec.topology == Topology::Diagonal)
                                  ? 1.0
                                  : static_cast<double>(spec.widths[l - 1]);
        Mat w(r, c);
        switch (scheme.kind) {
            case InitScheme::Kind::KaimingNormal: {
                const double std = std::sqrt(2.0 / fan_in);
                for (double& v : w.data()) v = rng.normal(0.0, std);
                break;
            }
            case InitScheme::Kind::KaimingUniform: {
                const double bound = std::sqrt(6.0 / fan_in);
                for (double& v : w.data()) v = rng.uniform(-bound, bound);
                break;
            }
            case InitScheme::Kind::IidNormal: {
                for (double& v : w.data()) v = rng.normal(0.0, scheme.scale);
                break;
            }
            case InitScheme::Kind::Explicit:
                break;  // handled above
        }
        net.weights.push_back(std::move(w));
    }
    return net;
}

ForwardResult forward(const NetworkState& net, const NetworkSpec& spec,
                      const std::vector<double>& x) {
    if (x.size() != spec.input_width())
        throw std::invalid_argument("forward: input length " + std::to_string(x.size()) +
                                    " != width " + std::to_string(spec.input_width()));
    ForwardResult res;
    std::vector<double> h = x;
    for (std::size_t l = 1; l <= spec.depth; ++l) {
        std::vector<double> pre;
        if (spec.topology == Topology::Diagonal) {
            pre.resize(h.size());
            for (std::size_t j = 0; j < h.size(); ++j) pre[j] = net.weights[l - 1](j, 0) * h[j];
        } else {
            pre = matvec(net.weights[l - 1], h);
        }
        if (l < spec.depth) {
            std::vector<double> mask(pre.size(), 1.0);
            if (spec.activation == Activation::Relu) {
                for (std::size_t j = 0; j < pre.size(); ++j) {
                    mask[j] = (pre[j] > 0.0) ? 1.0 : 0.0;
                    pre[j] *= mask[j];
                }
            }
            res.masks.layer.push_back(std::move(mask));
        }
        h = std::move(pre);
    }
    res.output = std::move(h);
    return res;
}

Batch full_batch(const Dataset& ds) {
    Batch b;
    b.X = &ds.X;
    b.Y = &ds.Y;
    b.rows.resize(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) b.rows[i] = i;
    return b;
}

Batch batch_of(const Dataset& ds, std::vector<std::size_t> rows) {
    Batch b;
    b.X = &ds.X;
    b.Y = &ds.Y;
    b.rows = std::move(rows);
    return b;
}

BackwardResult backward_mse(const NetworkState& net, const NetworkSpec& spec,
                            const Batch& batch) {
    if (batch.rows.empty()) throw std::invalid_argument("backward_mse: empty batch");
    if (batch.X->cols() != spec.input_width() || batch.Y->cols() != spec.output_width())
        throw std::invalid_argument("backward_mse: batch dimensions do not match the network");

    BackwardResult res;
    res.grads.g.reserve(spec.depth);
    for (std::size_t l = 1; l <= spec.depth; ++l) {
        const auto [r, c] = layer_shape(spec, l);
        res.grads.g.emplace_back(r, c);
    }

    const std::size_t bsize = batch.rows.size();
    std::vector<double> x(spec.input_width());
    for (std::size_t row : batch.rows) {
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = (*batch.X)(row, j);

        // Forward, keeping every hidden state.
        std::vector<std::vector<double>> hs;  // hs[l] = activations entering layer l+1
        hs.push_back(x);
        ForwardResult fwd;
        {
            std::vector<double> h = x;
            for (std::size_t l = 1; l <= spec.depth; ++l) {
                std::vector<double> pre;
                if (spec.topology == Topology::Diagonal) {
                    pre.resize(h.size());
                    for (std::size_t j = 0; j < h.size(); ++j)
                        pre[j] = net.weights[l - 1](j, 0) * h[j];
                } else {
                    pre = matvec(net.weights[l - 1], h);
                }
                if (l < spec.depth) {
                    std::vector<double> mask(pre.size(), 1.0);
                    if (spec.activation == Activation::Relu)
                        for (std::size_t j = 0; j < pre.size(); ++j) {
                            mask[j] = (pre[j] > 0.0) ? 1.0 : 0.0;
                            pre[j] *= mask[j];
                        }
                    fwd.masks.layer.push_back(std::move(mask));
                    hs.push_back(pre);
                }
                h = std::move(pre);
            }
            fwd.output = std::move(h);
        }

        std::vector<double> delta(spec.output_width());
        for (std::size_t j = 0; j < delta.size(); ++j) {
            const double rres = fwd.output[j] - (*batch.Y)(row, j);
            delta[j] = rres;
            res.loss += rres * rres;
        }

        for (std::size_t l = spec.depth; l >= 1; --l) {
            const std::vector<double>& hin = hs[l - 1];
            Mat& g = res.grads.g[l - 1];
            if (spec.topology == Topology::Diagonal) {
                for (std::size_t j = 0; j < delta.size(); ++j) g(j, 0) += delta[j] * hin[j];
            } else {
                for (std::size_t i = 0; i < delta.size(); ++i)
                    for (std::size_t j = 0; j < hin.size(); ++j) g(i, j) += delta[i] * hin[j];
            }
            if (l == 1) break;
            std::vector<double> prev(hin.size(), 0.0);
            if (spec.topology == Topology::Diagonal) {
                for (std::size_t j = 0; j < hin.size(); ++j)
                    prev[j] = net.weights[l - 1](j, 0) * delta[j];
            } else {
                for (std::size_t i = 0; i < delta.size(); ++i)
                    for (std::size_t j = 0; j < hin.size(); ++j)
                        prev[j] += net.weights[l - 1](i, j) * delta[i];
            }
            const std::vector<double>& mask = fwd.masks.layer[l - 2];
            for (std::size_t j = 0; j < prev.size(); ++j) prev[j] *= mask[j];
            delta = std::move(prev);
        }
    }

    const double inv = 1.0 / static_cast<double>(bsize);
    for (Mat& g : res.grads.g)
        for (double& v : g.data()) v *= inv;
    res.loss *= 0.5 * inv;
    return res;
}

double dataset_loss(const NetworkState& net, const NetworkSpec& spec, const Dataset& ds) {
    double loss = 0.0;
    std::vector<double> x(ds.d());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.d(); ++j) x[j] = ds.X(i, j);
        const auto out = forward(net, spec, x).output;
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double r = out[j] - ds.Y(i, j);
            loss += r * r;
        }
    }
    return 0.5 * loss / static_cast<double>(ds.n());
}

Mat dense_weight(const NetworkState& net, const NetworkSpec& spec, std::size_t l) {
    if (l < 1 || l > spec.depth) throw std::invalid_argument("dense_weight: bad layer index");
    const Mat& w = net.weights[l - 1];
    if (spec.topology == Topology::Dense) return w;
    Mat full(w.rows(), w.rows());
    for (std::size_t j = 0; j < w.rows(); ++j) full(j, j) = w(j, 0);
    return full;
}

Mat tail_product(const NetworkState& net, const NetworkSpec& spec) {
    Mat acc = Mat::identity(spec.output_width());
    for (std::size_t l = spec.depth; l >= 2; --l) acc = acc * dense_weight(net, spec, l);
    return acc;
}

std::vector<double> per_layer_irrelevant_norms(const NetworkState& net,
                                               const NetworkSpec& spec,
                                               const std::vector<std::size_t>& columns) {
    std::vector<double> norms(spec.depth, 0.0);
    for (std::size_t l = 1; l <= spec.depth; ++l) {
        const Mat& w = net.weights[l - 1];
        double s = 0.0;
        if (spec.topology == Topology::Diagonal) {
            for (std::size_t j : columns) s += w(j, 0) * w(j, 0);
        } else if (l == 1) {
            for (std::size_t j : columns)
                for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j) * w(i, j);
        } else {
            for (double v : w.data()) s += v * v;
        }
        norms[l - 1] = std::sqrt(s);
    }
    return norms;
}

void save_checkpoint(const NetworkState& net, const NetworkSpec& spec,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out << "sgdlab-checkpoint v1\n";
    out << "topology " << (spec.topology == Topology::Dense ? "dense" : "diagonal") << "\n";
    out << "activation " << (spec.activation == Activation::Identity ? "identity" : "relu")
        << "\n";
    out << "widths";
    for (std::size_t w : spec.widths) out << " " << w;
    out << "\n";
    char buf[64];
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Mat& w = net.weights[l];
        out << "layer " << (l + 1) << " " << w.rows() << " " << w.cols() << "\n";
        for (std::size_t i = 0; i < w.rows(); ++i) {
            for (std::size_t j = 0; j < w.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", w(i, j));
                out << buf << (j + 1 < w.cols() ? " " : "");
            }
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("checkpoint: write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "sgdlab-checkpoint v1")
        throw std::runtime_error("checkpoint: " + path + ": unknown header '" + line + "'");

    Checkpoint cp;
    std::string word;
    in >> word;
    if (word != "topology") throw std::runtime_error("checkpoint: expected topology line");
    in >> word;
    cp.spec.topology = (word == "dense") ? Topology::Dense : Topology::Diagonal;
    in >> word;
    if (word != "activation") throw std::runtime_error("checkpoint: expected activation line");
    in >> word;
    cp.spec.activation = (word == "identity") ? Activation::Identity : Activation::Relu;
    in >> word;
    if (word != "widths") throw std::runtime_error("checkpoint: expected widths line");
    {
        std::getline(in, line);
        std::istringstream ws(line);
        std::size_t w;
        while (ws >> w) cp.spec.widths.push_back(w);
    }
    cp.spec.depth = cp.spec.widths.empty() ? 0 : cp.spec.widths.size() - 1;
    cp.spec.validate();

    for (std::size_t l = 1; l <= cp.spec.depth; ++l) {
        std::size_t idx, rows, cols;
        in >> word >> idx >> rows >> cols;
        if (word != "layer" || idx != l)
            throw std::runtime_error("checkpoint: malformed layer header for layer " +
                                     std::to_string(l));
        Mat w(rows, cols);
        for (double& v : w.data()) {
            in >> word;
            v = std::strtod(word.c_str(), nullptr);
        }
        if (!in) throw std::runtime_error("checkpoint: truncated weights for layer " +
                                          std::to_string(l));
        cp.net.weights.push_back(std::move(w));
    }
    return cp;
}

}  // namespace sgdlab
