// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "pen/errors.hpp"
#include "pen/nn/adam.hpp"
#include "pen/nn/layers.hpp"

using namespace pen;
using namespace pen::nn;
using pen::testing::grad_check;
using pen::testing::random_tensor;
using pen::testing::weighted_sum;

namespace {

std::vector<Tensor> tensors(const std::vector<NamedParameter>& params) {
    std::vector<Tensor> out;
    for (const auto& p : params) out.push_back(p.tensor);
    return out;
}

}  // namespace

TEST_CASE("glorot uniform bounds and zero biases") {
    Rng rng(1);
    Dense d("fc", 30, 20);
    d.initialize(rng);
    const double limit = std::sqrt(6.0 / 50.0);
    double lo = 0.0, hi = 0.0;
    for (double w : d.weights.data()) {
        CHECK(std::abs(w) <= limit);
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    CHECK(hi > 0.8 * limit);
    CHECK(lo < -0.8 * limit);
    for (double b : d.bias.data()) CHECK(b == 0.0);

    Conv2D c("conv", 4, 8, 3);
    c.initialize(rng);
    const double climit = std::sqrt(6.0 / ((4 + 8) * 9.0));
    for (double w : c.kernel.data()) CHECK(std::abs(w) <= climit);
}

TEST_CASE("parameter names and shapes") {
    Dense d("fc", 3, 2);
    const auto p = d.parameters();
    REQUIRE(p.size() == 2);
    CHECK(p[0].name == "fc.weight");
    CHECK(p[0].tensor.shape() == Shape{3, 2});
    CHECK(p[1].name == "fc.bias");
    Conv2D c("conv", 2, 5, 3);
    CHECK(c.parameters()[0].name == "conv.kernel");
    CHECK(c.parameters()[0].tensor.shape() == Shape{5, 2, 3, 3});
    PReLU a("act");
    CHECK(a.parameters()[0].name == "act.slope");
    CHECK(a.slope.data()[0] == 0.25);
    ResNetBlock same("res", 4, 4);
    CHECK(same.parameters().size() == 5);
    ResNetBlock proj("res", 4, 6);
    CHECK(proj.parameters().size() == 7);
}

TEST_CASE("layer shape errors name the layer") {
    Dense d("trunk.dense1", 3, 2);
    try {
        (void)d.forward(Tensor::zeros({1, 4}));
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("trunk.dense1") != std::string::npos);
    }
    Conv2D c("head.conv", 2, 2);
    CHECK_THROWS_AS((void)c.forward(Tensor::zeros({1, 3, 4, 4})), DimensionError);
}

TEST_CASE("residual block gradient") {
    Rng rng(2);
    for (std::size_t out : {3u, 5u}) {
        ResNetBlock block("res", 3, out);
        block.initialize(rng);
        auto x = random_tensor({2, 3, 4, 4}, rng);
        auto params = tensors(block.parameters());
        params.push_back(x);
        const auto r = grad_check([&] { return weighted_sum(block.forward(x)); }, params);
        CHECK(r.max_rel_error < 1e-5);
    }
}

TEST_CASE("sequential stack") {
    Rng rng(3);
    Sequential net("mlp");
    auto d1 = std::make_unique<Dense>("fc1", 4, 6);
    auto d2 = std::make_unique<Dense>("fc2", 6, 1);
    d1->initialize(rng);
    d2->initialize(rng);
    net.add(std::move(d1)).add(std::make_unique<PReLU>("act")).add(std::move(d2)).add(std::make_unique<Sigmoid>("out"));
    CHECK(net.size() == 4);
    CHECK(net.parameters().size() == 5);
    auto x = random_tensor({3, 4}, rng);
    const auto y = net.forward(x);
    CHECK(y.shape() == Shape{3, 1});
    CHECK(grad_check([&] { return weighted_sum(net.forward(x)); }, tensors(net.parameters())).max_rel_error < 1e-5);
}

TEST_CASE("adam step matches a scalar reference") {
    Tensor w({2}, {0.5, -1.0}, true);
    Adam opt({w});
    // reference state for f(w) = sum(w^2 * (i+1))
    double theta[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0};
    for (int t = 1; t <= 5; ++t) {
        opt.zero_grad();
        sum(mul(mul(w, w), Tensor({2}, {1.0, 2.0}))).backward();
        opt.step(0.01);
        for (int i = 0; i < 2; ++i) {
            const double g = 2.0 * (i + 1) * theta[i];
            m[i] = 0.9 * m[i] + 0.1 * g;
            v[i] = 0.999 * v[i] + 0.001 * g * g;
            const double mh = m[i] / (1 - std::pow(0.9, t));
            const double vh = v[i] / (1 - std::pow(0.999, t));
            theta[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
        CHECK(w.data()[0] == doctest::Approx(theta[0]).epsilon(1e-14));
        CHECK(w.data()[1] == doctest::Approx(theta[1]).epsilon(1e-14));
    }
    CHECK(opt.state().t == 5);
    // the first step moves each coordinate by almost exactly lr
}

TEST_CASE("adam first step has magnitude lr") {
    Tensor w({3}, {1.0, -2.0, 3.0}, true);
    Adam opt({w});
    sum(mul(w, Tensor({3}, {5.0, -0.1, 1e-3}))).backward();
    opt.step(0.01);
    CHECK(w.data()[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-9));
    CHECK(w.data()[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-9));
}

TEST_CASE("adam rejects non-finite gradients without touching the state") {
    Tensor w({2}, {1.0, 2.0}, true);
    Adam opt({w});
    sum(w).backward();
    opt.step(0.1);
    const auto before = opt.state();
    const std::vector<double> theta(w.data().begin(), w.data().end());
    w.mutable_grad()[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(opt.step(0.1), TrainingError);
    CHECK(opt.state().t == before.t);
    CHECK(opt.state().m == before.m);
    CHECK(std::equal(theta.begin(), theta.end(), w.data().begin()));
    CHECK_THROWS_AS(opt.step(0.0), DomainError);
}

TEST_CASE("adam state roundtrip") {
    Tensor a({2}, {1.0, 2.0}, true);
    Tensor b({2}, {1.0, 2.0}, true);
    Adam oa({a});
    Adam ob({b});
    for (int i = 0; i < 3; ++i) {
        oa.zero_grad();
        sum(mul(a, a)).backward();
        oa.step(0.05);
    }
    ob.set_state(oa.state());
    b.mutable_data()[0] = a.data()[0];
    b.mutable_data()[1] = a.data()[1];
    oa.zero_grad();
    sum(mul(a, a)).backward();
    oa.step(0.05);
    ob.zero_grad();
    sum(mul(b, b)).backward();
    ob.step(0.05);
    CHECK(a.data()[0] == b.data()[0]);
    CHECK(a.data()[1] == b.data()[1]);

    AdamState bad;
    bad.m = {{0.0}};
    bad.v = {{0.0}};
    CHECK_THROWS_AS(ob.set_state(bad), DimensionError);
}
