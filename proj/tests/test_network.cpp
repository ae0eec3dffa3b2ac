#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "sgdlab/dataset.hpp"
#include "sgdlab/network.hpp"
#include "sgdlab/rng.hpp"
#include "support/fd_oracle.hpp"

using sgdlab::Activation;
using sgdlab::Dataset;
using sgdlab::InitScheme;
using sgdlab::Mat;
using sgdlab::NetworkSpec;
using sgdlab::NetworkState;
using sgdlab::Topology;

namespace {

Mat scalar(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return m;
}

// 2-layer scalar chain f(x) = a*b*x with W_1 = b, W_2 = a.
NetworkState toy_net(double a, double b) {
    return NetworkState{{scalar(b), scalar(a)}};
}

NetworkSpec toy_spec() {
    return NetworkSpec::diagonal(2, 1, Activation::Identity);
}

Dataset random_batch_data(std::size_t n, std::size_t d, std::size_t k, sgdlab::Rng& rng) {
    Dataset ds;
    ds.X = Mat(n, d);
    ds.Y = Mat(n, k);
    for (double& v : ds.X.data()) v = rng.normal();
    for (double& v : ds.Y.data()) v = rng.normal();
    return ds;
}

NetworkState random_net(const NetworkSpec& spec, std::uint64_t seed) {
    return sgdlab::init(spec, InitScheme::iid_normal(0.6), seed);
}

}  // namespace

TEST_CASE("init explicit toy network") {
    const auto net = sgdlab::init(toy_spec(), InitScheme::explicit_weights(
                                                  {scalar(0.3), scalar(0.9)}),
                                  0);
    const auto out = sgdlab::forward(net, toy_spec(), {2.0}).output;
    CHECK(out[0] == 0.9 * 0.3 * 2.0);
}

TEST_CASE("init zero scale gives the zero function") {
    const auto spec = NetworkSpec::dense({4, 5, 2}, Activation::Identity);
    const auto net = sgdlab::init(spec, InitScheme::iid_normal(0.0), 1);
    const auto out = sgdlab::forward(net, spec, {1.0, -2.0, 3.0, 0.5}).output;
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("init kaiming-normal variance near 2/fan_in") {
    const auto spec = NetworkSpec::dense({64, 64, 1}, Activation::Relu);
    const auto net = sgdlab::init(spec, InitScheme::kaiming_normal(), 2024);
    double mean = 0.0, var = 0.0;
    const auto& w = net.weights[0];
    for (double v : w.data()) mean += v;
    mean /= static_cast<double>(w.data().size());
    for (double v : w.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.data().size());
    const double expect = 2.0 / 64.0;
    CHECK(var > 0.8 * expect);
    CHECK(var < 1.2 * expect);
}

TEST_CASE("init validates explicit shapes and spec") {
    CHECK_THROWS(sgdlab::init(toy_spec(),
                              InitScheme::explicit_weights({scalar(1.0)}), 0));
    CHECK_THROWS(sgdlab::init(toy_spec(),
                              InitScheme::explicit_weights({Mat(2, 2), Mat(2, 2)}), 0));
    NetworkSpec bad;
    bad.depth = 2;
    bad.widths = {3, 3, 4};
    bad.topology = Topology::Diagonal;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("init deterministic per seed") {
    const auto spec = NetworkSpec::dense({6, 6, 6}, Activation::Identity);
    const auto a = sgdlab::init(spec, InitScheme::kaiming_uniform(), 5);
    const auto b = sgdlab::init(spec, InitScheme::kaiming_uniform(), 5);
    const auto c = sgdlab::init(spec, InitScheme::kaiming_uniform(), 6);
    CHECK(a.weights[0].data() == b.weights[0].data());
    CHECK(a.weights[0].data() != c.weights[0].data());
}

TEST_CASE("forward toy product") {
    const auto out = sgdlab::forward(toy_net(2.0, 3.0), toy_spec(), {1.0}).output;
    CHECK(out[0] == 6.0);
}

TEST_CASE("forward dead relu input") {
    const auto spec = NetworkSpec::dense({2, 3, 1}, Activation::Relu);
    Mat w1(3, 2, -1.0);
    Mat w2(1, 3, 1.0);
    const NetworkState net{{w1, w2}};
    const auto res = sgdlab::forward(net, spec, {1.0, 2.0});
    CHECK(res.output[0] == 0.0);
    REQUIRE(res.masks.layer.size() == 1);
    for (double m : res.masks.layer[0]) CHECK(m == 0.0);
}

TEST_CASE("forward matches explicit matrix product for linear nets") {
    const auto spec = NetworkSpec::dense({4, 6, 5, 3}, Activation::Identity);
    const auto net = random_net(spec, 31);
    sgdlab::Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> x(4);
        for (double& v : x) v = rng.normal();
        const auto got = sgdlab::forward(net, spec, x).output;
        const auto want = sgdlab::matvec(
            net.weights[2] * net.weights[1] * net.weights[0], x);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(got[j] == doctest::Approx(want[j]).epsilon(1e-12));
    }
}

TEST_CASE("forward is linear under identity activation") {
    const auto spec = NetworkSpec::dense({5, 4, 2}, Activation::Identity);
    const auto net = random_net(spec, 8);
    sgdlab::Rng rng(9);
    std::vector<double> x(5), xp(5), sum(5);
    for (std::size_t j = 0; j < 5; ++j) {
        x[j] = rng.normal();
        xp[j] = rng.normal();
        sum[j] = x[j] + xp[j];
    }
    const auto fx = sgdlab::forward(net, spec, x).output;
    const auto fxp = sgdlab::forward(net, spec, xp).output;
    const auto fsum = sgdlab::forward(net, spec, sum).output;
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(fsum[j] == doctest::Approx(fx[j] + fxp[j]).epsilon(1e-10));
}

TEST_CASE("forward masks reproduce exactly") {
    const auto spec = NetworkSpec::dense({3, 8, 8, 2}, Activation::Relu);
    const auto net = random_net(spec, 12);
    const std::vector<double> x{0.4, -1.2, 0.7};
    const auto a = sgdlab::forward(net, spec, x);
    const auto b = sgdlab::forward(net, spec, x);
    REQUIRE(a.masks.layer.size() == b.masks.layer.size());
    for (std::size_t l = 0; l < a.masks.layer.size(); ++l)
        CHECK(a.masks.layer[l] == b.masks.layer[l]);
}

TEST_CASE("forward rejects wrong input length") {
    CHECK_THROWS(sgdlab::forward(toy_net(1.0, 1.0), toy_spec(), {1.0, 2.0}));
}

TEST_CASE("backward on the two-point zero-target set") {
    // Full batch over {(1,0),(3,0)}: dL/db = 5 a^2 b, dL/da = 5 a b^2.
    const double a = 0.9, b = 0.3;
    const auto ds = sgdlab::toy_as_dataset(sgdlab::ToySet::D2);
    const auto res = sgdlab::backward_mse(toy_net(a, b), toy_spec(), sgdlab::full_batch(ds));
    CHECK(res.grads.g[0](0, 0) == doctest::Approx(5.0 * a * a * b).epsilon(1e-14));
    CHECK(res.grads.g[1](0, 0) == doctest::Approx(5.0 * a * b * b).epsilon(1e-14));
    CHECK(res.loss == doctest::Approx(0.5 * (a * b * a * b + 9.0 * a * b * a * b) / 2.0)
                          .epsilon(1e-14));
}

TEST_CASE("backward zero-residual batch") {
    const auto ds = sgdlab::toy_as_dataset(sgdlab::ToySet::D2);
    const auto res = sgdlab::backward_mse(toy_net(0.7, 0.0), toy_spec(),
                                          sgdlab::full_batch(ds));
    CHECK(res.loss == 0.0);
    CHECK(res.grads.g[0](0, 0) == 0.0);
    CHECK(res.grads.g[1](0, 0) == 0.0);
}

TEST_CASE("backward matches finite differences on a relu net") {
    const auto spec = NetworkSpec::dense({4, 6, 5, 2}, Activation::Relu);
    const auto net = random_net(spec, 21);
    sgdlab::Rng rng(22);
    const auto ds = random_batch_data(8, 4, 2, rng);
    const auto batch = sgdlab::full_batch(ds);
    const auto res = sgdlab::backward_mse(net, spec, batch);
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        for (std::size_t f = 0; f < net.weights[l].data().size(); ++f) {
            const double fd = fd_oracle::fd_entry(net, spec, batch, l, f, 1e-5);
            const double bp = res.grads.g[l].data()[f];
            CHECK(fd_oracle::rel_err(fd, bp) < 1e-5);
        }
}

TEST_CASE("gradient check across the architecture grid") {
    const std::vector<std::vector<std::size_t>> widths_by_depth = {
        {5, 7, 2}, {4, 8, 6, 3}, {3, 5, 4, 4, 2}};
    sgdlab::Rng rng(404);
    int probes = 0;
    for (const auto& widths : widths_by_depth) {
        for (Activation act : {Activation::Identity, Activation::Relu}) {
            const auto spec = NetworkSpec::dense(widths, act);
            const auto net = random_net(spec, 1000 + probes);
            const auto ds = random_batch_data(6, widths.front(), widths.back(), rng);
            const auto batch = sgdlab::full_batch(ds);
            const auto res = sgdlab::backward_mse(net, spec, batch);
            for (int p = 0; p < 20; ++p, ++probes) {
                const auto l = static_cast<std::size_t>(rng.index(net.weights.size()));
                const auto f =
                    static_cast<std::size_t>(rng.index(net.weights[l].data().size()));
                const double fd = fd_oracle::fd_entry(net, spec, batch, l, f, 1e-5);
                const double bp = res.grads.g[l].data()[f];
                CHECK(fd_oracle::rel_err(fd, bp) < 1e-5);
            }
        }
    }
    CHECK(probes >= 100);
}

TEST_CASE("diagonal chain gradient formula") {
    const auto spec = NetworkSpec::diagonal(3, 4, Activation::Identity);
    const auto net = random_net(spec, 55);
    sgdlab::Rng rng(56);
    const auto ds = random_batch_data(10, 4, 4, rng);
    const auto batch = sgdlab::full_batch(ds);
    const auto res = sgdlab::backward_mse(net, spec, batch);

    for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t j = 0; j < 4; ++j) {
            double others = 1.0;
            for (std::size_t i = 0; i < 3; ++i)
                if (i != h) others *= net.weights[i](j, 0);
            double moment = 0.0;
            for (std::size_t row : batch.rows) {
                double f = ds.X(row, j);
                for (std::size_t i = 0; i < 3; ++i) f *= net.weights[i](j, 0);
                moment += (f - ds.Y(row, j)) * ds.X(row, j);
            }
            moment /= static_cast<double>(batch.rows.size());
            CHECK(res.grads.g[h](j, 0) ==
                  doctest::Approx(others * moment).epsilon(1e-10));
        }
}

TEST_CASE("backward rejects empty and mismatched batches") {
    const auto ds = sgdlab::toy_as_dataset(sgdlab::ToySet::D1);
    CHECK_THROWS(sgdlab::backward_mse(toy_net(1.0, 1.0), toy_spec(),
                                      sgdlab::batch_of(ds, {})));
    const auto wide = sgdlab::gen_synthetic(3, 1, 4, sgdlab::SyntheticTarget::LinearSum, 0, 1);
    CHECK_THROWS(sgdlab::backward_mse(toy_net(1.0, 1.0), toy_spec(),
                                      sgdlab::full_batch(wide)));
}

TEST_CASE("tail_product composes layers above the first") {
    const auto spec = NetworkSpec::dense({3, 4, 5, 2}, Activation::Identity);
    const auto net = random_net(spec, 83);
    const Mat want = net.weights[2] * net.weights[1];
    const Mat got = sgdlab::tail_product(net, spec);
    CHECK(sgdlab::max_abs(got - want) == 0.0);

    const auto shallow = NetworkSpec::dense({3, 2}, Activation::Identity);
    const auto net1 = random_net(shallow, 84);
    CHECK(sgdlab::max_abs(sgdlab::tail_product(net1, shallow) - Mat::identity(2)) == 0.0);
}

TEST_CASE("checkpoint round-trips exactly") {
    const auto spec = NetworkSpec::dense({3, 5, 2}, Activation::Relu);
    const auto net = random_net(spec, 91);
    const std::string path = "/tmp/sgdlab_ckpt_test.txt";
    sgdlab::save_checkpoint(net, spec, path);
    const auto cp = sgdlab::load_checkpoint(path);
    CHECK(cp.spec.depth == spec.depth);
    CHECK(cp.spec.widths == spec.widths);
    CHECK(cp.spec.activation == spec.activation);
    CHECK(cp.spec.topology == spec.topology);
    REQUIRE(cp.net.weights.size() == net.weights.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        CHECK(cp.net.weights[l].data() == net.weights[l].data());
    std::remove(path.c_str());

    // Diagonal nets round-trip through the same format.
    const auto dspec = NetworkSpec::diagonal(3, 4, Activation::Identity);
    const auto dnet = random_net(dspec, 92);
    sgdlab::save_checkpoint(dnet, dspec, path);
    const auto dcp = sgdlab::load_checkpoint(path);
    CHECK(dcp.spec.topology == Topology::Diagonal);
    CHECK(dcp.net.weights[1].data() == dnet.weights[1].data());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects unknown header") {
    const std::string path = "/tmp/sgdlab_ckpt_bad.txt";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("not-a-checkpoint\n", f);
        std::fclose(f);
    }
    CHECK_THROWS(sgdlab::load_checkpoint(path));
    CHECK_THROWS(sgdlab::load_checkpoint("/nonexistent/ckpt.txt"));
    std::remove(path.c_str());
}
