#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elba/error.hpp"
#include "elba/nn.hpp"
#include "elba/rng.hpp"

using namespace elba;
using nn::Activation;
using nn::DenseNet;
using nn::MatrixXd;
using nn::VectorXd;

namespace {

DenseNet random_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                    uint64_t seed) {
    return nn::make_net(dims, acts, Rng(seed));
}

VectorXd random_vec(int n, Rng& rng, double scale = 1.0) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
    return v;
}

// Scalar loss g . f(x) so its input gradient has a closed finite-difference
// form for any probe direction g.
double probe_loss(const DenseNet& net, const VectorXd& x, const VectorXd& g) {
    return g.dot(nn::forward(net, x));
}

}  // namespace

TEST_CASE("forward: identity single layer reproduces its input") {
    DenseNet net;
    nn::Layer l;
    l.w = MatrixXd::Identity(3, 3);
    l.b = VectorXd::Zero(3);
    l.act = Activation::Identity;
    net.layers.push_back(l);
    VectorXd x(3);
    x << 1.5, -2.0, 0.25;
    CHECK((nn::forward(net, x) - x).norm() == doctest::Approx(0.0));
}

TEST_CASE("forward: zero weights yield the bias") {
    DenseNet net;
    nn::Layer l;
    l.w = MatrixXd::Zero(2, 3);
    l.b = VectorXd(2);
    l.b << 0.5, -1.5;
    l.act = Activation::Identity;
    net.layers.push_back(l);
    VectorXd x(3);
    x << 1, 2, 3;
    VectorXd y = nn::forward(net, x);
    CHECK(y(0) == doctest::Approx(0.5));
    CHECK(y(1) == doctest::Approx(-1.5));
}

TEST_CASE("forward: wrong input length is DimensionMismatch") {
    DenseNet net = random_net({4, 2}, {Activation::Tanh}, 1);
    VectorXd x = VectorXd::Zero(3);
    CHECK_THROWS_WITH_AS(nn::forward(net, x), doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("backward input gradient matches central finite differences") {
    Rng rng(7);
    DenseNet net = random_net({5, 7, 3}, {Activation::Tanh, Activation::Identity}, 99);
    VectorXd x = random_vec(5, rng);
    VectorXd g = random_vec(3, rng);

    nn::ForwardCache cache;
    nn::forward(net, x, &cache);
    VectorXd analytic = nn::backward(net, cache, g);

    const double h = 1e-5;
    for (int i = 0; i < x.size(); ++i) {
        VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        double fd = (probe_loss(net, xp, g) - probe_loss(net, xm, g)) / (2 * h);
        double denom = std::max(1e-12, std::abs(fd));
        CHECK(std::abs(analytic(i) - fd) / denom < 1e-6);
    }
}

TEST_CASE("backward: linear net input gradient is W^T g") {
    DenseNet net;
    nn::Layer l;
    l.w = MatrixXd(2, 3);
    l.w << 1, 2, 3, 4, 5, 6;
    l.b = VectorXd::Zero(2);
    l.act = Activation::Identity;
    net.layers.push_back(l);
    VectorXd x(3);
    x << 0.1, 0.2, 0.3;
    VectorXd g(2);
    g << 1.0, -1.0;
    nn::ForwardCache cache;
    nn::forward(net, x, &cache);
    VectorXd dx = nn::backward(net, cache, g);
    VectorXd expect = l.w.transpose() * g;
    CHECK((dx - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("backward: zero output gradient zeroes everything") {
    DenseNet net = random_net({4, 4, 2}, {Activation::Relu, Activation::Identity}, 5);
    Rng rng(11);
    VectorXd x = random_vec(4, rng);
    nn::ForwardCache cache;
    nn::forward(net, x, &cache);
    nn::Gradients grads = nn::zero_gradients(net);
    VectorXd dx = nn::backward(net, cache, VectorXd::Zero(2), &grads);
    CHECK(dx.norm() == doctest::Approx(0.0));
    CHECK(grads.squared_norm() == doctest::Approx(0.0));
}

TEST_CASE("gradient correctness property: params and inputs vs finite differences") {
    Rng trial_rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        int in = 2 + static_cast<int>(trial_rng.below(3));
        int mid = 2 + static_cast<int>(trial_rng.below(3));
        int out = 1 + static_cast<int>(trial_rng.below(3));
        Activation act = trial % 2 == 0 ? Activation::Tanh : Activation::Relu;
        DenseNet net = random_net({in, mid, out}, {act, Activation::Identity},
                                  trial_rng.next_u64());
        VectorXd x = random_vec(in, trial_rng);
        VectorXd g = random_vec(out, trial_rng);

        nn::ForwardCache cache;
        nn::forward(net, x, &cache);
        nn::Gradients grads = nn::zero_gradients(net);
        VectorXd dx = nn::backward(net, cache, g, &grads);

        const double h = 1e-6;
        auto fd_check = [&](double analytic, double* param) {
            double orig = *param;
            *param = orig + h;
            double up = probe_loss(net, x, g);
            *param = orig - h;
            double down = probe_loss(net, x, g);
            *param = orig;
            double fd = (up - down) / (2 * h);
            double denom = std::max(1e-6, std::abs(fd));
            CHECK(std::abs(analytic - fd) / denom < 1e-4);
        };
        // Probe a few parameters per layer rather than all of them.
        for (size_t li = 0; li < net.layers.size(); ++li) {
            auto& l = net.layers[li];
            fd_check(grads.dw[li](0, 0), &l.w(0, 0));
            fd_check(grads.db[li](0), &l.b(0));
        }
        fd_check(dx(0), &x(0));
    }
}

TEST_CASE("softmax_ce frozen values") {
    VectorXd logits(2);
    logits << 0.0, 0.0;
    auto ce = nn::softmax_ce(logits, 0);
    CHECK(ce.probs(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ce.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    VectorXd confident(3);
    confident << 50.0, 0.0, 0.0;
    auto ce2 = nn::softmax_ce(confident, 0);
    CHECK(ce2.logit_grad.norm() < 1e-9);

    VectorXd odds(4);
    odds << std::log(7.0), std::log(1.0), std::log(1.0), std::log(1.0);
    auto ce3 = nn::softmax_ce(odds, 1);
    CHECK(ce3.probs(0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(ce3.probs(1) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ce3.probs(2) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ce3.probs(3) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("softmax: normalization and shift invariance") {
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        VectorXd logits = random_vec(6, rng, 10.0);
        VectorXd p = nn::softmax(logits);
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
        VectorXd q = nn::softmax((logits.array() + 123.45).matrix());
        CHECK((p - q).norm() < 1e-12);
    }
}

TEST_CASE("softmax_ce: out-of-range label") {
    VectorXd logits = VectorXd::Zero(3);
    CHECK_THROWS_WITH_AS(nn::softmax_ce(logits, 3), doctest::Contains("IndexOutOfRange"), Error);
}

TEST_CASE("train_step: zero learning rate leaves the net unchanged") {
    DenseNet net = random_net({3, 2}, {Activation::Identity}, 21);
    DenseNet before = net;
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.optimizer = nn::Optimizer::Sgd;
    std::vector<VectorXd> batch = {VectorXd::Ones(3)};
    nn::train_step(
        net, batch,
        [](size_t, const VectorXd& out, double* loss) {
            *loss = out.squaredNorm();
            return VectorXd(2.0 * out);
        },
        cfg, nullptr);
    for (size_t i = 0; i < net.layers.size(); ++i) {
        CHECK((net.layers[i].w - before.layers[i].w).norm() == doctest::Approx(0.0));
        CHECK((net.layers[i].b - before.layers[i].b).norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("train_step: repeated least-squares batch is non-increasing early on") {
    DenseNet net = random_net({2, 1}, {Activation::Identity}, 3);
    nn::TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.optimizer = nn::Optimizer::Sgd;
    std::vector<VectorXd> batch;
    std::vector<double> targets;
    Rng rng(17);
    for (int i = 0; i < 8; ++i) {
        VectorXd x = random_vec(2, rng);
        batch.push_back(x);
        targets.push_back(3.0 * x(0) - 2.0 * x(1) + 0.5);
    }
    double prev = 1e18;
    for (int it = 0; it < 10; ++it) {
        double loss = nn::train_step(
            net, batch,
            [&](size_t i, const VectorXd& out, double* l) {
                double err = out(0) - targets[i];
                *l = err * err;
                VectorXd g(1);
                g << 2.0 * err;
                return g;
            },
            cfg, nullptr);
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
}

TEST_CASE("train_step: NaN inputs raise NonFiniteLoss") {
    DenseNet net = random_net({2, 1}, {Activation::Identity}, 3);
    nn::TrainConfig cfg;
    cfg.optimizer = nn::Optimizer::Sgd;
    std::vector<VectorXd> batch = {VectorXd::Constant(2, std::nan(""))};
    CHECK_THROWS_WITH_AS(nn::train_step(
                             net, batch,
                             [](size_t, const VectorXd& out, double* loss) {
                                 *loss = out.squaredNorm();
                                 return VectorXd(2.0 * out);
                             },
                             cfg, nullptr),
                         doctest::Contains("NonFiniteLoss"), Error);
}

TEST_CASE("training determinism: identical seeds give bit-identical checkpoints") {
    auto run = [] {
        DenseNet net = random_net({3, 4, 2}, {Activation::Tanh, Activation::Identity}, 77);
        nn::TrainConfig cfg;
        cfg.learning_rate = 0.01;
        cfg.optimizer = nn::Optimizer::Adam;
        nn::AdamState adam = nn::make_adam_state(net);
        Rng rng(5);
        for (int it = 0; it < 20; ++it) {
            std::vector<VectorXd> batch;
            for (int b = 0; b < 4; ++b) batch.push_back(random_vec(3, rng));
            nn::train_step(
                net, batch,
                [](size_t, const VectorXd& out, double* loss) {
                    *loss = out.squaredNorm();
                    return VectorXd(2.0 * out);
                },
                cfg, &adam);
        }
        return nn::net_to_json(net);
    };
    CHECK(run() == run());
}

TEST_CASE("net checkpoints round-trip exactly") {
    DenseNet net = random_net({4, 5, 3}, {Activation::Relu, Activation::Tanh}, 13);
    std::string text = nn::net_to_json(net);
    DenseNet back = nn::net_from_json(text);
    REQUIRE(back.layers.size() == net.layers.size());
    for (size_t i = 0; i < net.layers.size(); ++i) {
        CHECK((back.layers[i].w - net.layers[i].w).norm() == 0.0);
        CHECK((back.layers[i].b - net.layers[i].b).norm() == 0.0);
        CHECK(back.layers[i].act == net.layers[i].act);
    }
    CHECK(nn::net_to_json(back) == text);
}

TEST_CASE("gradient clipping caps the applied step") {
    DenseNet net = random_net({2, 2}, {Activation::Identity}, 9);
    DenseNet before = net;
    nn::TrainConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.optimizer = nn::Optimizer::Sgd;
    cfg.grad_clip = 1.0;
    nn::Gradients g = nn::zero_gradients(net);
    g.dw[0] = MatrixXd::Constant(2, 2, 100.0);
    g.db[0] = VectorXd::Constant(2, 100.0);
    nn::apply_update(net, g, cfg, nullptr);
    double moved = 0.0;
    moved += (net.layers[0].w - before.layers[0].w).squaredNorm();
    moved += (net.layers[0].b - before.layers[0].b).squaredNorm();
    CHECK(std::sqrt(moved) == doctest::Approx(1.0).epsilon(1e-9));
}
