#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "cal/errors.hpp"
#include "cal/nn.hpp"
#include "cal/rng.hpp"

using namespace cal;

namespace {

ModelParams zero_model(const std::vector<std::size_t>& dims) {
    ModelParams m = init_model(dims, 0);
    for (auto& w : m.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    return m;
}

BatchTargets ce_targets(std::vector<int> labels) {
    BatchTargets t;
    t.current_count = labels.size();
    t.labels = std::move(labels);
    return t;
}

// Random model/batch/targets for a composite loss.
struct Scenario {
    ModelParams model;
    Matrix X;
    BatchTargets targets;
};

Scenario random_scenario(const std::vector<std::size_t>& dims, std::size_t batch,
                         std::size_t n_replay, std::uint64_t seed) {
    Scenario s;
    s.model = init_model(dims, seed);
    Rng rng(derive_seed(seed, 1, "scenario"));
    s.X = Matrix(batch, dims.front());
    for (double& x : s.X.data) x = rng.normal();
    s.targets.current_count = batch - n_replay;
    for (std::size_t i = 0; i < batch; ++i)
        s.targets.labels.push_back(static_cast<int>(rng.uniform_below(dims.back())));
    if (n_replay > 0) {
        s.targets.replay_logits = Matrix(n_replay, dims.back());
        for (double& z : s.targets.replay_logits.data) z = rng.normal();
    }
    return s;
}

} // namespace

TEST_CASE("softmax: symmetry, closed form, overflow stability") {
    auto u = softmax({0, 0, 0, 0});
    for (double p : u) CHECK(p == doctest::Approx(0.25));

    auto p = softmax({0.0, std::log(3.0)});
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));

    auto q = softmax({1000.0, 0.0});
    CHECK(std::isfinite(q[0]));
    CHECK(q[0] == doctest::Approx(1.0));
    CHECK(q[1] == doctest::Approx(0.0));

    double sum = 0.0;
    for (double x : softmax({1.5, -2.0, 0.25, 9.0})) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("forward: zero model, identity model, golden fixture") {
    // zero weights and biases -> zero logits
    ModelParams z = zero_model({3, 4});
    Matrix X(2, 3);
    X.data = {1, 2, 3, -1, 0, 5};
    ForwardTrace t = forward(z, X);
    for (double v : t.logits.data) CHECK(v == 0.0);

    // identity single-layer model passes inputs through as logits
    ModelParams id = zero_model({2, 2});
    id.weights[0](0, 0) = 1.0;
    id.weights[0](1, 1) = 1.0;
    Matrix X2(1, 2);
    X2.data = {1.0, 2.0};
    ForwardTrace t2 = forward(id, X2);
    CHECK(t2.logits(0, 0) == 1.0);
    CHECK(t2.logits(0, 1) == 2.0);

    // golden fixture recorded from the first finite-difference-verified run
    ModelParams m = init_model({2, 16, 4}, 123);
    Matrix G(3, 2);
    G.data = {-0.88650329640233161, -0.04163534578894771, -1.4034642043305843,
              -2.1027964441089653, 2.3567770660563858, 0.33361392642401938};
    const double expected[12] = {
        0.15860995126036762,  -0.14014806328523963, -0.10004252198725883,
        0.29557784080899085,  0.10818062068193363,  -0.91145962462850338,
        0.20509145839075527,  0.26174051072552246,  0.033569460099766468,
        -0.31153820494450546, -0.46826556741905212, -0.026888376877388653};
    ForwardTrace g = forward(m, G);
    for (std::size_t i = 0; i < 12; ++i)
        CHECK(g.logits.data[i] == doctest::Approx(expected[i]).epsilon(1e-15));

    // determinism: identical inputs give bit-identical traces
    ForwardTrace g2 = forward(m, G);
    CHECK(std::memcmp(g.logits.data.data(), g2.logits.data.data(),
                      g.logits.data.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(g.penultimate.data.data(), g2.penultimate.data.data(),
                      g.penultimate.data.size() * sizeof(double)) == 0);

    CHECK_THROWS_AS(forward(m, Matrix(2, 5)), ShapeError);
}

TEST_CASE("forward probabilities: rows sum to one") {
    ModelParams m = init_model({3, 8, 5}, 99);
    Rng rng(5);
    Matrix X(7, 3);
    for (double& x : X.data) x = rng.normal();
    Matrix probs = softmax_rows(forward(m, X).logits);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) {
            sum += probs(i, j);
            CHECK(probs(i, j) > 0.0);
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("loss_cross_entropy: one-hot, uniform, closed form, bad label") {
    Matrix onehot(2, 3, 0.0);
    onehot(0, 1) = 1.0;
    onehot(1, 2) = 1.0;
    CHECK(loss_cross_entropy(onehot, {1, 2}) == doctest::Approx(0.0).epsilon(1e-9));

    Matrix uni(1, 4, 0.25);
    CHECK(loss_cross_entropy(uni, {2}) == doctest::Approx(std::log(4.0)));

    Matrix half(1, 2, 0.5);
    CHECK(loss_cross_entropy(half, {0}) == doctest::Approx(std::log(2.0)));

    CHECK_THROWS_AS(loss_cross_entropy(half, {5}), ContractError);
}

TEST_CASE("loss_kl: identity, closed forms, nonnegativity") {
    CHECK(loss_kl({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0));
    CHECK(loss_kl({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK(loss_kl({0.75, 0.25}, {0.25, 0.75}) == doctest::Approx(0.5 * std::log(3.0)));

    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        auto draw = [&](std::size_t k) {
            std::vector<double> p(k);
            double s = 0.0;
            for (double& x : p) {
                x = rng.next_double() + 1e-6;
                s += x;
            }
            for (double& x : p) x /= s;
            return p;
        };
        auto p = draw(5), q = draw(5);
        CHECK(loss_kl(p, q) >= 0.0);
        CHECK(loss_kl(p, p) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("loss_mse_logits: closed forms") {
    CHECK(loss_mse_logits({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(loss_mse_logits({1.0, 1.0}, {0.0, 0.0}) == doctest::Approx(2.0));
    CHECK(loss_mse_logits({3.0, -1.0}, {1.0, 1.0}) == doctest::Approx(8.0));
    CHECK_THROWS_AS(loss_mse_logits({1.0}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("backward: finite differences agree for every loss kind, 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Scenario ce = random_scenario({2, 8, 3}, 6, 0, seed);
        CHECK(grad_check(ce.model, ce.X, {LossKind::cross_entropy, 0, 0, 1}, ce.targets,
                         1e-5) <= 1e-4);

        Scenario der = random_scenario({2, 8, 3}, 6, 3, seed + 1000);
        CHECK(grad_check(der.model, der.X, {LossKind::der, 0.1, 1.0, 1}, der.targets,
                         1e-5) <= 1e-4);

        Scenario sd = random_scenario({2, 8, 3}, 6, 3, seed + 2000);
        CHECK(grad_check(sd.model, sd.X, {LossKind::sd, 0.25, 0.0, 0.5}, sd.targets,
                         1e-5) <= 1e-4);
    }
}

TEST_CASE("backward: gradient vanishes at an interpolating optimum") {
    // one-layer model on a separable pair, driven to huge logit margins
    ModelParams m = zero_model({2, 2});
    m.weights[0](0, 0) = 40.0;
    m.weights[0](1, 0) = -40.0;
    Matrix X(2, 2);
    X.data = {1.0, 0.0, -1.0, 0.0};
    BatchTargets t = ce_targets({0, 1});
    ForwardTrace trace = forward(m, X);
    Gradients g = backward(m, trace, {LossKind::cross_entropy, 0, 0, 1}, t);
    double norm = 0.0;
    for (const auto& w : g.weights)
        for (double v : w.data) norm += v * v;
    for (const auto& b : g.biases)
        for (double v : b) norm += v * v;
    CHECK(std::sqrt(norm) <= 1e-8);
}

TEST_CASE("backward: duplicating every row leaves mean-loss gradients unchanged") {
    Scenario s = random_scenario({3, 6, 4}, 5, 0, 77);
    ForwardTrace t1 = forward(s.model, s.X);
    Gradients g1 = backward(s.model, t1, {LossKind::cross_entropy, 0, 0, 1}, s.targets);

    Matrix X2(10, 3);
    BatchTargets t2;
    t2.current_count = 10;
    for (std::size_t i = 0; i < 10; ++i) {
        std::copy(s.X.row(i % 5), s.X.row(i % 5) + 3, X2.row(i));
        t2.labels.push_back(s.targets.labels[i % 5]);
    }
    Gradients g2 = backward(s.model, forward(s.model, X2),
                            {LossKind::cross_entropy, 0, 0, 1}, t2);
    for (std::size_t l = 0; l < g1.weights.size(); ++l) {
        for (std::size_t i = 0; i < g1.weights[l].data.size(); ++i)
            CHECK(g1.weights[l].data[i] ==
                  doctest::Approx(g2.weights[l].data[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < g1.biases[l].size(); ++i)
            CHECK(g1.biases[l][i] == doctest::Approx(g2.biases[l][i]).epsilon(1e-12));
    }
}

TEST_CASE("sgd_step: lr 0, plain step, momentum recurrence, bad gradients") {
    ModelParams m = init_model({2, 3}, 4);
    Gradients g;
    g.weights.emplace_back(3, 2, 1.0);
    g.biases.emplace_back(3, 1.0);

    ModelParams frozen = sgd_step(m, g, 0.0, 0.9, 0.0);
    for (std::size_t i = 0; i < m.weights[0].data.size(); ++i)
        CHECK(frozen.weights[0].data[i] == m.weights[0].data[i]);

    // single scalar semantics: theta=1, grad=2, lr=0.1 -> 0.8
    ModelParams scalar = zero_model({2, 1});
    scalar.weights[0](0, 0) = 1.0;
    Gradients gs;
    gs.weights.emplace_back(1, 2, 0.0);
    gs.weights[0](0, 0) = 2.0;
    gs.biases.emplace_back(1, 0.0);
    ModelParams stepped = sgd_step(scalar, gs, 0.1, 0.0, 0.0);
    CHECK(stepped.weights[0](0, 0) == doctest::Approx(0.8));

    // two unit-gradient steps at momentum 0.9: velocity 1, then 1.9
    ModelParams mo = zero_model({2, 1});
    Gradients unit;
    unit.weights.emplace_back(1, 2, 0.0);
    unit.weights[0](0, 0) = 1.0;
    unit.biases.emplace_back(1, 0.0);
    mo = sgd_step(std::move(mo), unit, 0.1, 0.9, 0.0);
    CHECK(mo.weight_momentum[0](0, 0) == doctest::Approx(1.0));
    mo = sgd_step(std::move(mo), unit, 0.1, 0.9, 0.0);
    CHECK(mo.weight_momentum[0](0, 0) == doctest::Approx(1.9));

    Gradients bad;
    bad.weights.emplace_back(3, 2, 0.0);
    bad.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    bad.biases.emplace_back(3, 0.0);
    CHECK_THROWS_AS(sgd_step(m, bad, 0.1, 0.0, 0.0), NumericError);
}

TEST_CASE("init_model: seeded, bounded, zero biases") {
    ModelParams a = init_model({4, 8, 3}, 21);
    ModelParams b = init_model({4, 8, 3}, 21);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        CHECK(a.weights[l].data == b.weights[l].data);
    double limit0 = std::sqrt(6.0 / (4 + 8));
    for (double w : a.weights[0].data) CHECK(std::abs(w) <= limit0);
    for (double bias : a.biases[0]) CHECK(bias == 0.0);
    CHECK(a.param_count() == 4 * 8 + 8 + 8 * 3 + 3);
    CHECK_THROWS_AS(init_model({3}, 1), ContractError);
}
