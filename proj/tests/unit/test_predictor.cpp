// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gradcheck.hpp"
#include "pen/errors.hpp"
#include "pen/predictor.hpp"

using namespace pen;
using pen::testing::grad_check;
using pen::testing::weighted_sum;

namespace {

ArchitectureConfig small_arch() {
    ArchitectureConfig a;
    a.d_inp = 4;
    a.dense_widths = {24, 4 * 16};
    a.channels = 4;
    a.level1_convs = 2;
    a.max_level = 3;
    return a;
}

InputSample sample(int d_inp, int row, double fy, double m_tar) {
    auto bc = BoundaryConditionSet::left_edge_clamp(d_inp);
    bc.rsy(row, d_inp) = fy;
    return {bc, m_tar};
}

}  // namespace

TEST_CASE("default architecture") {
    const ArchitectureConfig a;
    CHECK(a.input_width() == 325);
    CHECK(a.dense_widths.back() == 64 * 8 * 8);
    CHECK_NOTHROW(a.validate());
    const Predictor p(a);
    // trunk 325*512+512 + 512*1024+1024 + 1024*2048+2048 + 2048*4096+4096 + 4 slopes
    const std::size_t trunk = 325 * 512 + 512 + 512 * 1024 + 1024 + 1024 * 2048 + 2048 + 2048 * 4096 + 4096 + 4;
    const std::size_t level1 = (64 * 64 * 9 + 64) + 1 + (64 * 9 + 1);
    const std::size_t head = 2 * (64 * 64 * 9 + 64) + 1 + 1 + (64 * 9 + 1);
    CHECK(p.parameter_count() == trunk + level1 + 3 * head);
}

TEST_CASE("architecture validation and json roundtrip") {
    auto a = small_arch();
    CHECK(ArchitectureConfig::from_json(a.to_json()) == a);
    a.dense_widths.back() = 63;
    CHECK_THROWS_AS(a.validate(), ConfigError);
    auto j = small_arch().to_json();
    j["bogus"] = 1;
    try {
        (void)ArchitectureConfig::from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "bogus");
    }
    auto k = small_arch();
    k.kernel = 4;
    CHECK_THROWS_AS(k.validate(), ConfigError);
}

TEST_CASE("forward shapes per level and densities in (0, 1)") {
    Rng rng(1);
    const Predictor p(small_arch(), rng);
    const std::vector<InputSample> batch{sample(4, 0, -100, 0.3), sample(4, 2, 100, 0.6)};
    const auto in = p.make_input(batch);
    CHECK(in.shape() == nn::Shape{2, 101});
    for (int level = 1; level <= 3; ++level) {
        const auto out = p.forward(in, level);
        const std::size_t d = 4u << (level - 1);
        CHECK(out.shape() == nn::Shape{2, d * d});
        for (double v : out.data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
    CHECK_THROWS_AS((void)p.forward(in, 4), DomainError);
    CHECK_THROWS_AS((void)p.forward(in, 0), DomainError);
    CHECK_THROWS_AS((void)p.forward(nn::Tensor::zeros({2, 100}), 1), DimensionError);
    CHECK_THROWS_AS((void)p.make_input(std::vector<InputSample>{sample(8, 0, 1, 0.5)}), DimensionError);
}

TEST_CASE("predict returns a clamped field") {
    Rng rng(2);
    const Predictor p(small_arch(), rng);
    const auto f = p.predict(sample(4, 1, -100, 0.5), 2);
    CHECK(f.d() == 8);
    for (double v : f.values()) {
        CHECK(v >= kDefaultXMin);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("a level only depends on its own and lower parameters") {
    Rng rng(3);
    const Predictor p(small_arch(), rng);
    CHECK(p.parameters_up_to(1).size() < p.parameters_up_to(2).size());
    CHECK(p.parameters_up_to(3).size() == p.parameters().size());
    const auto in = p.make_input(std::vector<InputSample>{sample(4, 3, 50, 0.4)});
    weighted_sum(p.forward(in, 2)).backward();
    const auto low = p.parameters_up_to(2);
    const auto all = p.parameters();
    for (std::size_t i = 0; i < all.size(); ++i) {
        const bool used = i < low.size();
        CHECK(low.size() <= all.size());
        if (!used) CHECK(all[i].tensor.grad().empty());
    }
    for (std::size_t i = 0; i < low.size(); ++i) CHECK(low[i].name == all[i].name);
}

TEST_CASE("parameters are float32 values after initialization") {
    Rng rng(4);
    const Predictor p(small_arch(), rng);
    for (const auto& np : p.parameters())
        for (double v : np.tensor.data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
}

TEST_CASE("seeded initialization is reproducible and the hash tracks the architecture") {
    Rng r1(9), r2(9);
    const Predictor a(small_arch(), r1);
    const Predictor b(small_arch(), r2);
    const auto pa = a.parameters();
    const auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pb[i].tensor.data().begin()));
    }
    CHECK(a.architecture_hash() == b.architecture_hash());
    CHECK(a.architecture_hash().size() == 64);
    auto other = small_arch();
    other.max_level = 2;
    CHECK(Predictor(other).architecture_hash() != a.architecture_hash());
}

TEST_CASE("predictor gradient w.r.t. every parameter") {
    ArchitectureConfig a;
    a.d_inp = 4;
    a.dense_widths = {2 * 16};
    a.channels = 2;
    a.level1_convs = 1;
    a.max_level = 2;
    Rng rng(5);
    Predictor p(a, rng);
    const auto in = p.make_input(std::vector<InputSample>{sample(4, 0, -1.0, 0.3), sample(4, 4, 0.5, 0.7)});
    std::vector<nn::Tensor> params;
    for (const auto& np : p.parameters()) params.push_back(np.tensor);
    // h = 1e-5: with 1e-6 the differences of gradients near 1e-5 carry ~3e-10 of rounding noise
    const auto r = grad_check([&] { return weighted_sum(p.forward(in, 2)); }, params, 1e-5);
    CHECK(r.max_rel_error < 1e-5);
    CHECK(r.checked > 0);
}
