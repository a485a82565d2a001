// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csisteg/errors.hpp"
#include "csisteg/neural.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace csisteg;
using namespace csisteg::nn;

namespace {

// Oracle: central finite differences of the linear functional w^T f(x)
// against every parameter. Returns the fraction of parameters whose relative
// error stays under tol.
double fd_agreement(DenseNet net, const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                    double tol) {
    const ParamGrads grads = backward(net, x, w);
    const double eps = 1e-5;
    std::size_t ok = 0, total = 0;
    auto loss = [&](const DenseNet& n) { return w.dot(forward(n, x)); };
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& l = net.layers[li];
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
                const double orig = l.weight(r, c);
                l.weight(r, c) = orig + eps;
                const double up = loss(net);
                l.weight(r, c) = orig - eps;
                const double dn = loss(net);
                l.weight(r, c) = orig;
                const double fd = (up - dn) / (2.0 * eps);
                const double an = grads.dweight[li](r, c);
                const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
                ok += rel < tol;
                ++total;
            }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            const double orig = l.bias(r);
            l.bias(r) = orig + eps;
            const double up = loss(net);
            l.bias(r) = orig - eps;
            const double dn = loss(net);
            l.bias(r) = orig;
            const double fd = (up - dn) / (2.0 * eps);
            const double an = grads.dbias[li](r);
            const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
            ok += rel < tol;
            ++total;
        }
    }
    return static_cast<double>(ok) / static_cast<double>(total);
}

} // namespace

TEST_CASE("identity layer passes input through") {
    DenseNet net;
    Layer l;
    l.weight = Eigen::MatrixXd::Identity(3, 3);
    l.bias = Eigen::VectorXd::Zero(3);
    l.act = Activation::None;
    net.layers.push_back(l);
    Eigen::VectorXd x(3);
    x << 1.5, -2.0, 0.25;
    const Eigen::VectorXd y = forward(net, x);
    CHECK((y - x).norm() == 0.0);
}

TEST_CASE("tanh output saturates within its bound") {
    DenseNet net;
    Layer l;
    l.weight = Eigen::MatrixXd::Constant(4, 2, 50.0);
    l.bias = Eigen::VectorXd::Constant(4, 10.0);
    l.act = Activation::Tanh;
    net.layers.push_back(l);
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    const Eigen::VectorXd y = forward(net, x);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        CHECK(y(i) > 0.0);
        CHECK(y(i) <= 1.0);
    }
}

TEST_CASE("two-layer net matches hand-computed values") {
    DenseNet net;
    Layer a;
    a.weight.resize(2, 2);
    a.weight << 1.0, 2.0, -1.0, 0.5;
    a.bias.resize(2);
    a.bias << 0.5, -0.25;
    a.act = Activation::ReLU;
    Layer b;
    b.weight.resize(1, 2);
    b.weight << 3.0, -2.0;
    b.bias.resize(1);
    b.bias << 0.125;
    b.act = Activation::None;
    net.layers = {a, b};

    Eigen::VectorXd x(2);
    x << 1.0, -1.0;
    // layer 1 pre: [1-2+0.5, -1-0.5-0.25] = [-0.5, -1.75] -> ReLU -> [0, 0]
    // layer 2: 0.125
    const Eigen::VectorXd y = forward(net, x);
    CHECK(y(0) == doctest::Approx(0.125).epsilon(1e-12));

    x << 2.0, 0.5;
    // layer 1 pre: [2+1+0.5, -2+0.25-0.25] = [3.5, -2] -> ReLU -> [3.5, 0]
    // layer 2: 3*3.5 + 0.125 = 10.625
    CHECK(forward(net, x)(0) == doctest::Approx(10.625).epsilon(1e-12));
}

TEST_CASE("forward rejects dimension mismatches") {
    const DenseNet net = make_net({4, 3}, {Activation::None}, 1);
    Eigen::VectorXd x(5);
    x.setZero();
    CHECK_THROWS_AS(forward(net, x), std::invalid_argument);
}

TEST_CASE("zero upstream gradient yields zero parameter gradients") {
    const DenseNet net = make_net({5, 8, 3}, {Activation::ReLU, Activation::Tanh}, 7);
    Eigen::VectorXd x = Eigen::VectorXd::Random(5);
    const ParamGrads g = backward(net, x, Eigen::VectorXd::Zero(3));
    for (const auto& w : g.dweight) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& b : g.dbias) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer has the closed-form gradient") {
    DenseNet net = make_net({3, 2}, {Activation::None}, 3);
    Eigen::VectorXd x(3);
    x << 0.5, -1.0, 2.0;
    Eigen::VectorXd target(2);
    target << 0.25, -0.75;
    const Eigen::VectorXd out = forward(net, x);
    const Eigen::VectorXd err = out - target;
    // L = ||out - target||^2, dL/dout = 2 err, dL/dW = 2 err x^T
    const ParamGrads g = backward(net, x, Eigen::VectorXd(2.0 * err));
    const Eigen::MatrixXd want = 2.0 * err * x.transpose();
    CHECK((g.dweight[0] - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g.dbias[0] - 2.0 * err).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic gradients agree with finite differences") {
    std::mt19937_64 rng(0x9e1);
    std::normal_distribution<double> n01(0.0, 1.0);
    const std::vector<std::vector<Activation>> stacks = {
        {Activation::ReLU, Activation::None},
        {Activation::Tanh, Activation::Tanh},
        {Activation::ReLU, Activation::Tanh, Activation::None},
        {Activation::ReLU, Activation::ReLU, Activation::ReLU},
    };
    int case_idx = 0;
    for (const auto& acts : stacks) {
        std::vector<int> dims;
        dims.push_back(6);
        for (std::size_t i = 0; i + 1 < acts.size(); ++i) dims.push_back(11);
        dims.push_back(4);
        DenseNet net = make_net(dims, acts, 1000 + case_idx);
        Eigen::VectorXd x(6), w(4);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = n01(rng);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = n01(rng);
        const double frac = fd_agreement(net, x, w, 1e-4);
        CHECK(frac >= 0.99);
        ++case_idx;
    }
}

TEST_CASE("batched backward equals summed per-sample gradients") {
    const DenseNet net = make_net({4, 9, 3}, {Activation::Tanh, Activation::ReLU}, 0x77);
    std::mt19937_64 rng(0x9e2);
    std::normal_distribution<double> n01(0.0, 1.0);
    const int batch = 5;
    Eigen::MatrixXd xs(4, batch), us(3, batch);
    for (int c = 0; c < batch; ++c)
        for (int r = 0; r < 4; ++r) xs(r, c) = n01(rng);
    for (int c = 0; c < batch; ++c)
        for (int r = 0; r < 3; ++r) us(r, c) = n01(rng);

    ForwardTrace trace;
    forward_trace(net, xs, trace);
    const ParamGrads batched = backward(net, xs, trace, us);

    ParamGrads summed = ParamGrads::zeros_like(net);
    for (int c = 0; c < batch; ++c)
        summed.accumulate(backward(net, Eigen::VectorXd(xs.col(c)), Eigen::VectorXd(us.col(c))));

    for (std::size_t i = 0; i < batched.dweight.size(); ++i) {
        CHECK((batched.dweight[i] - summed.dweight[i]).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((batched.dbias[i] - summed.dbias[i]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("optimizers hold still under zero gradients") {
    DenseNet net = make_net({3, 3}, {Activation::None}, 5);
    const Eigen::MatrixXd before = net.layers[0].weight;
    auto st = OptimizerState::rmsprop(net, 1e-3, 8);
    step(net, ParamGrads::zeros_like(net), st);
    CHECK((net.layers[0].weight - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("RMSProp first step follows the accumulator recursion") {
    DenseNet net = make_net({1, 1}, {Activation::None}, 5);
    const double w0 = net.layers[0].weight(0, 0);
    auto st = OptimizerState::rmsprop(net, 0.01, 1);
    ParamGrads g = ParamGrads::zeros_like(net);
    const double grad = 0.8;
    g.dweight[0](0, 0) = grad;
    step(net, g, st);
    const double accum = (1.0 - st.rmsprop_alpha) * grad * grad;
    const double want = w0 - 0.01 * grad / std::sqrt(accum + st.epsilon);
    CHECK(net.layers[0].weight(0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("Adam first step is approximately the learning rate") {
    DenseNet net = make_net({1, 1}, {Activation::None}, 6);
    const double w0 = net.layers[0].weight(0, 0);
    auto st = OptimizerState::adam(net, 0.002, 1);
    ParamGrads g = ParamGrads::zeros_like(net);
    g.dweight[0](0, 0) = 1.7;
    step(net, g, st);
    CHECK(std::abs(std::abs(net.layers[0].weight(0, 0) - w0) - 0.002) < 1e-5);
}

TEST_CASE("non-finite gradients are rejected") {
    DenseNet net = make_net({2, 2}, {Activation::None}, 9);
    auto st = OptimizerState::rmsprop(net, 1e-3, 1);
    ParamGrads g = ParamGrads::zeros_like(net);
    g.dweight[0](0, 0) = std::nan("");
    CHECK_THROWS_AS(step(net, g, st), TrainingDivergedError);
}

TEST_CASE("weights round-trip bit-exactly through the binary format") {
    const DenseNet net = make_net({7, 12, 5}, {Activation::ReLU, Activation::Tanh}, 0xbeef);
    const auto blob = save_weights(net);
    const DenseNet back = load_weights(blob);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        CHECK(back.layers[i].act == net.layers[i].act);
        CHECK((back.layers[i].weight - net.layers[i].weight).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.layers[i].bias - net.layers[i].bias).cwiseAbs().maxCoeff() == 0.0);
    }
    std::mt19937_64 rng(0x9e3);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        Eigen::VectorXd x(7);
        for (Eigen::Index i = 0; i < 7; ++i) x(i) = n01(rng);
        CHECK((forward(net, x) - forward(back, x)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("weight format carries magic and version up front") {
    const DenseNet net = make_net({2, 2}, {Activation::None}, 1);
    const auto blob = save_weights(net);
    REQUIRE(blob.size() > 12u);
    CHECK(blob[0] == 'C');
    CHECK(blob[1] == 'S');
    CHECK(blob[2] == 'N');
    CHECK(blob[3] == 'N');
    CHECK(blob[4] == 1); // version 1 little-endian
    CHECK(blob[5] == 0);
}

TEST_CASE("truncated or corrupted blobs are rejected whole") {
    const DenseNet net = make_net({3, 4, 2}, {Activation::ReLU, Activation::None}, 2);
    auto blob = save_weights(net);
    for (std::size_t cut : {std::size_t(0), std::size_t(3), std::size_t(10), blob.size() - 1}) {
        std::vector<std::uint8_t> part(blob.begin(), blob.begin() + cut);
        CHECK_THROWS_AS(load_weights(part), FormatError);
    }
    auto bad_magic = blob;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_weights(bad_magic), FormatError);
    auto bad_version = blob;
    bad_version[4] = 9;
    CHECK_THROWS_AS(load_weights(bad_version), FormatError);
    auto trailing = blob;
    trailing.push_back(0);
    CHECK_THROWS_AS(load_weights(trailing), FormatError);
}

TEST_CASE("weight files survive a disk round trip") {
    const DenseNet net = make_net({4, 6, 3}, {Activation::Tanh, Activation::ReLU}, 0xf00d);
    const std::string path = "test_weights_tmp.bin";
    save_weights_file(net, path);
    const DenseNet back = load_weights_file(path);
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        CHECK((back.layers[i].weight - net.layers[i].weight).cwiseAbs().maxCoeff() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("initialization is deterministic per seed") {
    const DenseNet a = make_net({6, 10, 4}, {Activation::ReLU, Activation::None}, 42);
    const DenseNet b = make_net({6, 10, 4}, {Activation::ReLU, Activation::None}, 42);
    const DenseNet c = make_net({6, 10, 4}, {Activation::ReLU, Activation::None}, 43);
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        CHECK((a.layers[i].weight - b.layers[i].weight).cwiseAbs().maxCoeff() == 0.0);
    bool differs = false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        differs |= (a.layers[i].weight - c.layers[i].weight).cwiseAbs().maxCoeff() > 0.0;
    CHECK(differs);
}

TEST_CASE("kaiming bound and zero bias at init") {
    const DenseNet net = make_net({16, 32}, {Activation::ReLU}, 11);
    const double bound = std::sqrt(6.0 / 16.0);
    CHECK(net.layers[0].weight.cwiseAbs().maxCoeff() <= bound);
    CHECK(net.layers[0].weight.cwiseAbs().maxCoeff() > 0.5 * bound); // actually random
    CHECK(net.layers[0].bias.cwiseAbs().maxCoeff() == 0.0);
}
