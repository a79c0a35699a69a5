// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "pen/errors.hpp"
#include "pen/nn/ops.hpp"
#include "pen/nn/tensor.hpp"

using namespace pen;
using namespace pen::nn;
using pen::testing::grad_check;
using pen::testing::random_tensor;
using pen::testing::weighted_sum;

namespace {

// Direct same-padded cross-correlation.
std::vector<double> naive_conv(const Tensor& x, const Tensor& k, const Tensor& b) {
    const auto& xs = x.shape();
    const auto& ks = k.shape();
    const std::size_t nb = xs[0], ci = xs[1], h = xs[2], w = xs[3], co = ks[0], kk = ks[2];
    const long pad = static_cast<long>(kk / 2);
    std::vector<double> out(nb * co * h * w, 0.0);
    for (std::size_t n = 0; n < nb; ++n)
        for (std::size_t o = 0; o < co; ++o)
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c) {
                    double s = b.data()[o];
                    for (std::size_t i = 0; i < ci; ++i)
                        for (std::size_t a = 0; a < kk; ++a)
                            for (std::size_t e = 0; e < kk; ++e) {
                                const long rr = static_cast<long>(r + a) - pad;
                                const long cc = static_cast<long>(c + e) - pad;
                                if (rr < 0 || cc < 0 || rr >= static_cast<long>(h) || cc >= static_cast<long>(w))
                                    continue;
                                s += x.data()[((n * ci + i) * h + static_cast<std::size_t>(rr)) * w +
                                              static_cast<std::size_t>(cc)] *
                                     k.data()[((o * ci + i) * kk + a) * kk + e];
                            }
                    out[((n * co + o) * h + r) * w + c] = s;
                }
    return out;
}

}  // namespace

TEST_CASE("tensor basics") {
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.size() == 6);
    CHECK(to_string(t.shape()) == "[2,3]");
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
    CHECK(Tensor::scalar(2.5).item() == 2.5);
    CHECK_THROWS_AS((void)t.item(), DimensionError);
    CHECK(numel({}) == 1);
}

TEST_CASE("backward requires a scalar with a recorded graph") {
    Rng rng(1);
    auto x = random_tensor({3}, rng);
    CHECK_THROWS_AS(mul(x, x).backward(), DimensionError);
    const Tensor c = Tensor::scalar(1.0);
    CHECK_THROWS_AS(c.backward(), StateError);
}

TEST_CASE("leaf gradients accumulate across backward calls") {
    Tensor x({2}, {1.0, 2.0}, true);
    sum(mul(x, x)).backward();
    CHECK(x.grad()[1] == doctest::Approx(4.0));
    sum(mul(x, x)).backward();
    CHECK(x.grad()[1] == doctest::Approx(8.0));
    x.zero_grad();
    CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("shared subexpressions receive the sum of both paths") {
    Tensor x({1}, {3.0}, true);
    const Tensor y = mul(x, x);
    sum(add(y, mul(y, x))).backward();  // x^2 + x^3
    CHECK(x.grad()[0] == doctest::Approx(2 * 3.0 + 3 * 9.0));
}

TEST_CASE("no-grad guard disables recording") {
    Tensor x({2}, {1.0, 2.0}, true);
    {
        const NoGradGuard guard;
        CHECK_FALSE(NoGradGuard::grad_enabled());
        CHECK_FALSE(mul(x, x).requires_grad());
    }
    CHECK(NoGradGuard::grad_enabled());
    CHECK(mul(x, x).requires_grad());
}

TEST_CASE("linear forward and gradient") {
    Rng rng(2);
    auto x = random_tensor({3, 4}, rng);
    auto w = random_tensor({4, 5}, rng);
    auto b = random_tensor({5}, rng);
    const auto y = linear(x, w, b);
    CHECK(y.shape() == Shape{3, 5});
    double ref = b.data()[2];
    for (int k = 0; k < 4; ++k) ref += x.data()[4 + k] * w.data()[k * 5 + 2];
    CHECK(y.data()[5 + 2] == doctest::Approx(ref));
    const auto r = grad_check([&] { return weighted_sum(linear(x, w, b)); }, {x, w, b});
    CHECK(r.max_rel_error < 1e-6);
    CHECK(r.checked == 12 + 20 + 5);
    CHECK_THROWS_AS((void)linear(x, random_tensor({3, 5}, rng), b), DimensionError);
}

TEST_CASE("conv2d matches direct convolution") {
    Rng rng(3);
    for (std::size_t k : {1u, 3u, 5u}) {
        auto x = random_tensor({2, 3, 6, 5}, rng);
        auto kern = random_tensor({4, 3, k, k}, rng);
        auto b = random_tensor({4}, rng);
        const auto y = conv2d(x, kern, b);
        CHECK(y.shape() == Shape{2, 4, 6, 5});
        const auto ref = naive_conv(x, kern, b);
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d gradients, including chunked im2col") {
    Rng rng(4);
    auto x = random_tensor({2, 2, 5, 5}, rng);
    auto kern = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    const auto r = grad_check([&] { return weighted_sum(conv2d(x, kern, b)); }, {x, kern, b});
    CHECK(r.max_rel_error < 1e-6);

    // 3 x 128 x 128 exceeds one im2col chunk
    auto big = random_tensor({3, 1, 128, 128}, rng);
    auto k1 = random_tensor({2, 1, 3, 3}, rng);
    auto b1 = random_tensor({2}, rng);
    const auto y = conv2d(big, k1, b1);
    const auto ref = naive_conv(big, k1, b1);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(y.data()[i] - ref[i]));
    CHECK(err < 1e-12);
    weighted_sum(y).backward();
    // d/dbias of sum(w * y) = sum of w over the output channel
    Rng wr(1234);
    const auto w = random_tensor(y.shape(), wr, -1.0, 1.0, false);
    double expect = 0.0;
    for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t s = 0; s < 128 * 128; ++s) expect += w.data()[(n * 2 + 1) * 128 * 128 + s];
    CHECK(b1.grad()[1] == doctest::Approx(expect).epsilon(1e-10));

    CHECK_THROWS_AS((void)conv2d(x, random_tensor({3, 2, 2, 2}, rng), b), DimensionError);
    CHECK_THROWS_AS((void)conv2d(x, random_tensor({3, 4, 3, 3}, rng), b), DimensionError);
}

TEST_CASE("prelu") {
    Tensor x({4}, {-2.0, -0.5, 0.5, 3.0}, true);
    Tensor a({1}, {0.25}, true);
    const auto y = prelu(x, a);
    CHECK(y.data()[0] == -0.5);
    CHECK(y.data()[3] == 3.0);
    const auto r = grad_check([&] { return weighted_sum(prelu(x, a)); }, {x, a});
    CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("sigmoid stays strictly inside (0, 1)") {
    Tensor x({5}, {-1000.0, -2.0, 0.0, 2.0, 1000.0}, true);
    const auto y = sigmoid(x);
    CHECK(y.data()[2] == 0.5);
    CHECK(y.data()[0] > 0.0);
    CHECK(y.data()[4] < 1.0);
    CHECK(y.data()[3] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    Rng rng(5);
    auto z = random_tensor({10}, rng, -4, 4);
    CHECK(grad_check([&] { return weighted_sum(sigmoid(z)); }, {z}).max_rel_error < 1e-6);
}

TEST_CASE("clamp") {
    Tensor x({4}, {-1.0, 0.2, 0.7, 2.0}, true);
    const auto y = clamp(x, 0.0, 1.0);
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[3] == 1.0);
    weighted_sum(y).backward();
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[3] == 0.0);
    CHECK(x.grad()[1] != 0.0);
}

TEST_CASE("average pooling and nearest upsampling") {
    Tensor x({1, 1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
    const auto p = avg_pool2d(x, 2);
    CHECK(p.shape() == Shape{1, 1, 1, 2});
    CHECK(p.data()[0] == 3.5);
    CHECK(p.data()[1] == 5.5);
    CHECK_THROWS_AS((void)avg_pool2d(x, 3), DimensionError);

    const auto u = upsample_nearest2d(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}), 2);
    CHECK(u.shape() == Shape{1, 1, 4, 4});
    const std::vector<double> expect{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
    CHECK(std::equal(expect.begin(), expect.end(), u.data().begin()));
    CHECK(avg_pool2d(u, 2).data()[3] == 4.0);

    Rng rng(6);
    auto z = random_tensor({2, 3, 4, 4}, rng);
    CHECK(grad_check([&] { return weighted_sum(avg_pool2d(z, 2)); }, {z}).max_rel_error < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(upsample_nearest2d(z, 3)); }, {z}).max_rel_error < 1e-6);
}

TEST_CASE("elementwise, broadcast, reshape and reductions") {
    Rng rng(7);
    auto a = random_tensor({2, 3, 2, 2}, rng);
    auto b = random_tensor({2, 3, 2, 2}, rng);
    auto c = random_tensor({2, 1, 2, 2}, rng);
    CHECK(grad_check([&] { return weighted_sum(add(a, b)); }, {a, b}).max_rel_error < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(mul(a, b)); }, {a, b}).max_rel_error < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(add_channel_broadcast(a, c)); }, {a, c}).max_rel_error < 1e-6);
    CHECK(grad_check([&] { return weighted_sum(reshape(a, {4, 6})); }, {a}).max_rel_error < 1e-6);
    CHECK(grad_check([&] { return mean(mul(a, a)); }, {a}).max_rel_error < 1e-6);
    const auto bc = add_channel_broadcast(a, c);
    CHECK(bc.data()[1 * 4 + 2] == doctest::Approx(a.data()[1 * 4 + 2] + c.data()[2]));
    CHECK_THROWS_AS((void)add(a, c), DimensionError);
    CHECK_THROWS_AS((void)reshape(a, {5, 5}), DimensionError);
    CHECK(mean(Tensor({4}, {1, 2, 3, 6})).item() == 3.0);
}

TEST_CASE("external objective injects value and gradient") {
    Rng rng(8);
    auto x = random_tensor({2, 3}, rng);
    auto fn = [](std::span<const double> v, const Shape&) {
        ExternalResult r;
        for (double e : v) r.value += std::sin(e);
        for (double e : v) r.grad.push_back(std::cos(e));
        return r;
    };
    const auto y = external_objective(mul(x, x), fn);
    double ref = 0.0;
    for (double e : x.data()) ref += std::sin(e * e);
    CHECK(y.item() == doctest::Approx(ref));
    CHECK(grad_check([&] { return external_objective(mul(x, x), fn); }, {x}).max_rel_error < 1e-6);

    auto bad = [](std::span<const double>, const Shape&) { return ExternalResult{1.0, {1.0}}; };
    CHECK_THROWS_AS((void)external_objective(x, bad), DimensionError);
}
