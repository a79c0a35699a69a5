// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "pen/errors.hpp"
#include "pen/fem.hpp"

using namespace pen;
using pen::testing::relative_error;

namespace {

fem::FemProblem make_problem(const pen::testing::OracleProblem& p, double x_min = kDefaultXMin) {
    const int d_inp = p.d;
    return {Level{1, d_inp}, p.rk, p.rs, 3.0, fem::Material{}, x_min};
}

}  // namespace

TEST_CASE("element stiffness matches 2x2 Gauss quadrature") {
    for (double nu : {0.0, 0.3, 0.45}) {
        const fem::Material m{195000.0, nu};
        const auto closed = fem::element_stiffness(m);
        const auto gauss = pen::testing::gauss_element_stiffness(m.youngs_modulus, nu);
        CHECK((closed - gauss).cwiseAbs().maxCoeff() <= 1e-9 * gauss.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("element stiffness is symmetric with three rigid-body modes") {
    const auto ke = fem::element_stiffness({});
    CHECK((ke - ke.transpose()).norm() == doctest::Approx(0.0));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(ke);
    int zero = 0;
    for (int i = 0; i < 8; ++i) {
        if (std::abs(es.eigenvalues()(i)) < 1e-8 * es.eigenvalues().maxCoeff()) ++zero;
        CHECK(es.eigenvalues()(i) > -1e-6);
    }
    CHECK(zero == 3);
}

TEST_CASE("force vector interleaves x and y blocks") {
    const std::vector<double> rs{1, 2, 3, 4, 5, 6, 7, 8};
    const auto f = fem::build_force_vector(rs);
    CHECK(f(0) == 1);
    CHECK(f(1) == 5);
    CHECK(f(6) == 4);
    CHECK(f(7) == 8);
    CHECK_THROWS_AS((void)fem::build_force_vector(std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("element DOFs follow the column-wise node numbering") {
    Rng rng(1);
    const auto p = pen::testing::random_cantilever(3, rng);
    const auto prob = make_problem(p);
    // element 0: rows 0..1, columns 0..1 -> nodes tl 0, bl 1, tr 4, br 5
    const auto dofs = prob.element_dofs(0);
    const std::array<int, 8> expected{2, 3, 10, 11, 8, 9, 0, 1};
    CHECK(dofs == expected);
    const auto last = prob.element_dofs(8);
    CHECK(last[0] == 2 * 11);
    CHECK(last[4] == 2 * 14);
}

TEST_CASE("compliance matches the brute-force oracle") {
    Rng rng(42);
    for (int d : {2, 4, 6}) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto p = pen::testing::random_cantilever(d, rng);
            const auto x = pen::testing::random_densities(static_cast<std::size_t>(d * d), rng, 0.001, 1.0);
            const auto prob = make_problem(p);
            const auto res = fem::solve_compliance(x, prob);
            const double ref = pen::testing::brute_force_compliance(p, x, 3.0, 195000.0, 0.3);
            CHECK(relative_error(res.c, ref) <= 1e-8);
            CHECK(res.c > 0.0);
        }
    }
}

TEST_CASE("sparse path matches the dense path") {
    Rng rng(7);
    const auto p = pen::testing::random_cantilever(20, rng);
    const auto x = pen::testing::random_densities(400, rng, 0.01, 1.0);
    const auto res = fem::solve_compliance(x, make_problem(p));
    const double ref = pen::testing::brute_force_compliance(p, x, 3.0, 195000.0, 0.3);
    CHECK(relative_error(res.c, ref) <= 1e-8);
}

TEST_CASE("compliance equals u^T K u and fixed DOFs stay at zero") {
    Rng rng(3);
    const auto p = pen::testing::random_cantilever(5, rng);
    const auto x = pen::testing::random_densities(25, rng);
    const auto prob = make_problem(p);
    const auto res = fem::solve_compliance(x, prob);
    const auto k = fem::assemble_stiffness(x, prob);
    CHECK(relative_error(res.u.dot(k * res.u), res.c) <= 1e-10);
    for (int dof : prob.fixed_dofs()) CHECK(res.u(dof) == 0.0);
}

TEST_CASE("sensitivities match central differences") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = pen::testing::random_cantilever(4, rng);
        auto x = pen::testing::random_densities(16, rng, 0.1, 0.9);
        const auto prob = make_problem(p);
        const auto res = fem::solve_compliance(x, prob);
        for (std::size_t e = 0; e < x.size(); ++e) {
            const double h = 1e-6;
            const double x0 = x[e];
            x[e] = x0 + h;
            const double cp = fem::solve_compliance(x, prob).c;
            x[e] = x0 - h;
            const double cm = fem::solve_compliance(x, prob).c;
            x[e] = x0;
            const double fd = (cp - cm) / (2 * h);
            CHECK(relative_error(res.dc_dx[e], fd) <= 1e-4);
            CHECK(res.dc_dx[e] <= 0.0);
        }
    }
}

TEST_CASE("compliance decreases when material is added") {
    Rng rng(5);
    const auto p = pen::testing::random_cantilever(6, rng);
    auto x = pen::testing::random_densities(36, rng, 0.2, 0.8);
    const auto prob = make_problem(p);
    const double c0 = fem::solve_compliance(x, prob).c;
    for (auto& v : x) v = std::min(1.0, v + 0.1);
    CHECK(fem::solve_compliance(x, prob).c < c0);
}

TEST_CASE("mesh refinement of a uniform field keeps compliance of the same order") {
    const auto bc = [] {
        auto b = BoundaryConditionSet::left_edge_clamp(4);
        b.rsy(0, 4) = -100.0;
        return b;
    }();
    const double c1 = fem::solve_compliance(DensityField::uniform(Level{1, 4}, 0.5), bc).c;
    const double c2 = fem::solve_compliance(DensityField::uniform(Level{2, 4}, 0.5), bc).c;
    CHECK(c2 > c1);  // finer mesh is less stiff, point load singularity
    CHECK(c2 < 2.0 * c1);
}

TEST_CASE("invalid input is rejected") {
    Rng rng(2);
    const auto p = pen::testing::random_cantilever(3, rng);
    const auto prob = make_problem(p);
    CHECK_THROWS_AS((void)fem::solve_compliance(std::vector<double>(8, 0.5), prob), DimensionError);
    std::vector<double> x(9, 0.5);
    x[3] = 0.0;
    CHECK_THROWS_AS((void)fem::solve_compliance(x, prob), DomainError);
    x[3] = 1.5;
    CHECK_THROWS_AS((void)fem::solve_compliance(x, prob), DomainError);
    CHECK_THROWS_AS(fem::FemProblem(Level{1, 3}, std::vector<double>(4), std::vector<double>(32)), DimensionError);
}

TEST_CASE("unsupported structure raises SolverError") {
    Rng rng(9);
    auto p = pen::testing::random_cantilever(3, rng);
    std::fill(p.rk.begin(), p.rk.end(), 0.0);
    CHECK_THROWS_AS((void)fem::solve_compliance(std::vector<double>(9, 0.5), make_problem(p)), SolverError);
    // only the x direction fixed: vertical rigid-body translation remains
    for (int r = 0; r <= 3; ++r) p.rk[static_cast<std::size_t>(r)] = 1.0;
    CHECK_THROWS_AS((void)fem::solve_compliance(std::vector<double>(9, 0.5), make_problem(p)), SolverError);
    p.d = 20;
    const int l = 21 * 21;
    p.rk.assign(2 * l, 0.0);
    p.rs.assign(2 * l, 0.0);
    p.rs[static_cast<std::size_t>(l + 30)] = 1.0;
    CHECK_THROWS_AS((void)fem::solve_compliance(std::vector<double>(400, 0.5), make_problem(p)), SolverError);
}

TEST_CASE("matrix market dump lists every stored entry") {
    Rng rng(4);
    const auto p = pen::testing::random_cantilever(2, rng);
    const auto prob = make_problem(p);
    const auto k = fem::assemble_stiffness(std::vector<double>(4, 1.0), prob);
    std::ostringstream out;
    fem::write_matrix_market(k, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    long rows = 0, cols = 0, nnz = 0;
    in >> rows >> cols >> nnz;
    CHECK(rows == 18);
    CHECK(cols == 18);
    CHECK(nnz == k.nonZeros());
}
