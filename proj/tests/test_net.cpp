#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "averl/errors.hpp"
#include "averl/net.hpp"
#include "grad_check.hpp"

using namespace averl;

namespace {

Eigen::VectorXd random_vector(int n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1, 1);
    return v;
}



}  // namespace

TEST_CASE("forward of the zero network is the zero vector") {
    const auto params = NetworkParameters::zeros(3, 4, {8});
    const auto q = forward(params, Eigen::VectorXd::Ones(3));
    CHECK(q.size() == 4);
    CHECK(q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("advantage-head bias shifts cancel exactly") {
    Rng rng(5);
    auto params = NetworkParameters::randomized(4, 3, {16, 16}, rng);
    const auto x = random_vector(4, rng);
    const auto q0 = forward(params, x);
    params.adv_head.b.array() += 3.25;
    const auto q1 = forward(params, x);
    CHECK((q1 - q0).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("value-head bias shifts every action value by the same constant") {
    Rng rng(6);
    auto params = NetworkParameters::randomized(4, 3, {16}, rng);
    const auto x = random_vector(4, rng);
    const auto q0 = forward(params, x);
    params.value_head.b(0) += 2.5;
    const auto q1 = forward(params, x);
    for (int a = 0; a < 3; ++a) CHECK(q1(a) - q0(a) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("forward is deterministic") {
    Rng rng(7);
    const auto params = NetworkParameters::randomized(5, 2, {32}, rng);
    const auto x = random_vector(5, rng);
    CHECK(forward(params, x) == forward(params, x));
}

TEST_CASE("backward at a perfect target gives zero loss and zero grads") {
    Rng rng(8);
    const auto params = NetworkParameters::randomized(3, 2, {8}, rng);
    const auto x = random_vector(3, rng);
    const double target = forward(params, x)(1);
    const auto result = backward(params, x, 1, target);
    CHECK(result.loss == 0.0);
    double grad_mass = 0.0;
    for_each_tensor(result.grads, [&](const auto& t) { grad_mass += t.cwiseAbs().sum(); });
    CHECK(grad_mass == 0.0);
}

TEST_CASE("backward matches hand-derived gradients for a single linear layer") {
    // no trunk: q = v + A - mean(A) with v = wv.x, A = Wa.x
    auto params = NetworkParameters::zeros(2, 2, {});
    params.value_head.w << 0.5, -1.0;
    params.adv_head.w << 1.0, 2.0, -0.5, 0.25;
    Eigen::VectorXd x(2);
    x << 0.3, -0.7;
    const int action = 0;
    const double target = 0.2;

    const double v = params.value_head.w.row(0).dot(x);
    const Eigen::VectorXd adv = params.adv_head.w * x;
    const double q0 = v + adv(0) - adv.mean();
    const double delta = q0 - target;

    const auto result = backward(params, x, action, target);
    CHECK(result.loss == doctest::Approx(0.5 * delta * delta).epsilon(1e-12));
    // dq0/dwv = x, dq0/dWa[0,:] = (1 - 1/2) x, dq0/dWa[1,:] = -1/2 x
    for (int c = 0; c < 2; ++c) {
        CHECK(result.grads.value_head.w(0, c) == doctest::Approx(delta * x(c)).epsilon(1e-12));
        CHECK(result.grads.adv_head.w(0, c) ==
              doctest::Approx(delta * 0.5 * x(c)).epsilon(1e-12));
        CHECK(result.grads.adv_head.w(1, c) ==
              doctest::Approx(-delta * 0.5 * x(c)).epsilon(1e-12));
    }
    CHECK(result.grads.value_head.b(0) == doctest::Approx(delta).epsilon(1e-12));
    CHECK(result.grads.adv_head.b(0) == doctest::Approx(delta * 0.5).epsilon(1e-12));
    CHECK(result.grads.adv_head.b(1) == doctest::Approx(-delta * 0.5).epsilon(1e-12));
}

TEST_CASE("analytic gradients agree with central finite differences") {
    Rng rng(42);
    for (int trial = 0; trial < 8; ++trial) {
        const auto params = NetworkParameters::randomized(3, 2, {6, 5}, rng);
        const auto x = random_vector(3, rng);
        const int action = static_cast<int>(rng.uniform_int(2));
        const double target = rng.uniform(-2, 2);
        CHECK(oracle::max_relative_grad_error(params, x, action, target) <= 1e-4);
    }
}

TEST_CASE("batched backward equals the average of per-sample backward calls") {
    Rng rng(11);
    const auto params = NetworkParameters::randomized(3, 2, {8}, rng);
    const int batch = 4;
    Eigen::MatrixXd xs(3, batch);
    std::vector<int> actions(batch);
    Eigen::VectorXd targets(batch);
    for (int j = 0; j < batch; ++j) {
        xs.col(j) = random_vector(3, rng);
        actions[j] = static_cast<int>(rng.uniform_int(2));
        targets(j) = rng.uniform(-1, 1);
    }
    GradientSet batch_grads = GradientSet::zeros_like(params);
    const double batch_loss = backward_batch(params, xs, actions, targets, batch_grads);

    double mean_loss = 0.0;
    GradientSet mean_grads = GradientSet::zeros_like(params);
    for (int j = 0; j < batch; ++j) {
        const auto r = backward(params, xs.col(j), actions[j], targets(j));
        mean_loss += r.loss / batch;
        for_each_tensor_pair(mean_grads, const_cast<GradientSet&>(r.grads),
                             [&](auto& acc, auto& g) { acc += g / batch; });
    }
    CHECK(batch_loss == doctest::Approx(mean_loss).epsilon(1e-12));
    double worst = 0.0;
    for_each_tensor_pair(batch_grads, mean_grads, [&](auto& a, auto& b) {
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    });
    CHECK(worst <= 1e-12);
}

TEST_CASE("sgd step arithmetic") {
    auto params = NetworkParameters::zeros(1, 1, {});
    params.value_head.w(0, 0) = 1.0;
    auto grads = GradientSet::zeros_like(params);
    grads.value_head.w(0, 0) = 2.0;

    Optimizer frozen(Optimizer::Kind::Sgd, 0.0);
    auto copy = params;
    frozen.step(copy, grads);
    CHECK(copy.value_head.w(0, 0) == 1.0);

    Optimizer opt(Optimizer::Kind::Sgd, 0.1);
    opt.step(params, grads);
    CHECK(params.value_head.w(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("adam step with all-zero gradients is the identity") {
    Rng rng(13);
    auto params = NetworkParameters::randomized(2, 2, {4}, rng);
    const auto before = params_to_json(params);
    Optimizer opt(Optimizer::Kind::Adam, 0.01);
    opt.step(params, GradientSet::zeros_like(params));
    CHECK(params_to_json(params) == before);
}

TEST_CASE("adam moves parameters against the gradient") {
    auto params = NetworkParameters::zeros(1, 1, {});
    auto grads = GradientSet::zeros_like(params);
    grads.value_head.w(0, 0) = 3.0;
    Optimizer opt(Optimizer::Kind::Adam, 0.01);
    opt.step(params, grads);
    CHECK(params.value_head.w(0, 0) < 0.0);
}

TEST_CASE("target sync is a frozen value copy") {
    Rng rng(14);
    auto online = NetworkParameters::randomized(3, 2, {8}, rng);
    const auto target = sync_target(online);
    const auto x = random_vector(3, rng);
    const auto before = forward(target, x);
    CHECK(forward(online, x) == before);

    online.trunk[0].w.array() += 1.0;
    online.value_head.b(0) -= 2.0;
    CHECK(forward(target, x) == before);
    CHECK(forward(online, x) != before);

    const auto second = sync_target(online);
    for (int i = 0; i < 20; ++i) {
        const auto probe = random_vector(3, rng);
        CHECK(forward(second, probe) == forward(online, probe));
    }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    Rng rng(15);
    const auto params = NetworkParameters::randomized(4, 3, {8, 8}, rng);
    const auto path =
        (std::filesystem::temp_directory_path() / "averl_net_roundtrip.json").string();
    save_params(params, path);
    const auto loaded = load_params(path);
    std::remove(path.c_str());

    CHECK(loaded.input_dim == params.input_dim);
    CHECK(loaded.num_actions == params.num_actions);
    bool identical = true;
    for_each_tensor_pair(const_cast<NetworkParameters&>(params),
                         const_cast<NetworkParameters&>(loaded),
                         [&](auto& a, auto& b) { identical = identical && a == b; });
    CHECK(identical);
}

TEST_CASE("checkpoint loader rejects malformed documents") {
    CHECK_THROWS_AS(params_from_json("not json"), ParseError);
    CHECK_THROWS_AS(params_from_json("{\"format_version\": 9}"), ParseError);
}
