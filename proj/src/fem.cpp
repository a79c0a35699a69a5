// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include "pen/errors.hpp"

namespace pen::fem {
namespace {

// Smallest admissible ratio between the smallest and largest pivot of the reduced stiffness
// matrix. Void regions at x_min^p reach about 1e-9, rigid-body modes end up near round-off.
constexpr double kPivotRatioFloor = 1e-12;
constexpr int kDenseSolveMaxSide = 16;
constexpr double kResidualTolerance = 1e-8;

void check_densities(std::span<const double> x, const FemProblem& problem) {
    if (static_cast<int>(x.size()) != problem.level().elements()) {
        throw DimensionError("expected " + std::to_string(problem.level().elements()) + " densities, got " +
                             std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= problem.x_min() && x[i] <= 1.0)) {
            throw DomainError("density x[" + std::to_string(i) + "] = " + std::to_string(x[i]) +
                              " outside [x_min, 1]; clamp before evaluating compliance");
        }
    }
}

[[noreturn]] void throw_singular(double ratio, int free_dofs) {
    std::ostringstream msg;
    msg << "reduced stiffness matrix is singular (" << free_dofs << " free DOFs, pivot ratio " << ratio
        << ", condition estimate >= " << (ratio > 0.0 ? 1.0 / ratio : INFINITY)
        << "); the kinematic boundary conditions do not suppress all rigid-body modes";
    throw SolverError(msg.str());
}

template <typename Diagonal>
void check_pivots(const Diagonal& pivots, int free_dofs) {
    const double hi = pivots.maxCoeff();
    const double lo = pivots.minCoeff();
    const double ratio = hi > 0.0 ? lo / hi : 0.0;
    if (!(ratio >= kPivotRatioFloor)) {
        throw_singular(ratio, free_dofs);
    }
}

}  // namespace

ElementMatrix element_stiffness(const Material& material) {
    const double nu = material.poisson_ratio;
    const std::array<double, 8> k{1.0 / 2 - nu / 6,  1.0 / 8 + nu / 8, -1.0 / 4 - nu / 12, -1.0 / 8 + 3 * nu / 8,
                                  -1.0 / 4 + nu / 12, -1.0 / 8 - nu / 8, nu / 6,              1.0 / 8 - 3 * nu / 8};
    ElementMatrix ke;
    // clang-format off
    ke << k[0], k[1], k[2], k[3], k[4], k[5], k[6], k[7],
          k[1], k[0], k[7], k[6], k[5], k[4], k[3], k[2],
          k[2], k[7], k[0], k[5], k[6], k[3], k[4], k[1],
          k[3], k[6], k[5], k[0], k[7], k[2], k[1], k[4],
          k[4], k[5], k[6], k[7], k[0], k[1], k[2], k[3],
          k[5], k[4], k[3], k[2], k[1], k[0], k[7], k[6],
          k[6], k[3], k[4], k[1], k[2], k[7], k[0], k[5],
          k[7], k[2], k[1], k[4], k[3], k[6], k[5], k[0];
    // clang-format on
    return ke * (material.youngs_modulus / (1.0 - nu * nu));
}

Eigen::VectorXd build_force_vector(std::span<const double> rs) {
    if (rs.size() % 2 != 0) {
        throw DimensionError("static boundary vector must have even length, got " + std::to_string(rs.size()));
    }
    const std::size_t l = rs.size() / 2;
    const int side = side_length(l);  // l = (d+1)^2
    (void)side;
    Eigen::VectorXd f(static_cast<Eigen::Index>(rs.size()));
    for (std::size_t i = 0; i < l; ++i) {
        f(static_cast<Eigen::Index>(2 * i)) = rs[i];
        f(static_cast<Eigen::Index>(2 * i + 1)) = rs[l + i];
    }
    return f;
}

FemProblem::FemProblem(Level level, std::span<const double> rk, std::span<const double> rs, double penal,
                       Material material, double x_min)
    : level_(level), penal_(penal), x_min_(x_min), material_(material), ke_(element_stiffness(material)) {
    const auto n = static_cast<std::size_t>(level.dofs());
    if (rk.size() != n || rs.size() != n) {
        throw DimensionError("level " + std::to_string(level.lambda) + " expects boundary vectors of length " +
                             std::to_string(n) + ", got rk=" + std::to_string(rk.size()) +
                             " rs=" + std::to_string(rs.size()));
    }
    force_ = build_force_vector(rs);
    const std::size_t l = n / 2;
    reduced_.assign(n, -1);
    for (std::size_t node = 0; node < l; ++node) {
        for (std::size_t axis = 0; axis < 2; ++axis) {
            const auto dof = static_cast<int>(2 * node + axis);
            if (rk[axis * l + node] != 0.0) {
                fixed_.push_back(dof);
            } else {
                reduced_[static_cast<std::size_t>(dof)] = static_cast<int>(free_.size());
                free_.push_back(dof);
            }
        }
    }
    std::sort(fixed_.begin(), fixed_.end());
}

FemProblem::FemProblem(Level level, const BoundaryConditionSet& bc, double penal, Material material, double x_min)
    : FemProblem(level, map_bcs_to_level(bc, level).rk, map_bcs_to_level(bc, level).rs, penal, material, x_min) {}

std::array<int, 8> FemProblem::element_dofs(int element) const {
    const int d = level_.d();
    const int r = element % d;
    const int c = element / d;
    const int tl = r + (d + 1) * c;
    const int bl = tl + 1;
    const int tr = r + (d + 1) * (c + 1);
    const int br = tr + 1;
    return {2 * bl, 2 * bl + 1, 2 * br, 2 * br + 1, 2 * tr, 2 * tr + 1, 2 * tl, 2 * tl + 1};
}

SparseMatrix assemble_stiffness(std::span<const double> x, const FemProblem& problem) {
    check_densities(x, problem);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(x.size() * 64);
    const auto& ke = problem.ke();
    for (int e = 0; e < static_cast<int>(x.size()); ++e) {
        const double scale = std::pow(x[static_cast<std::size_t>(e)], problem.penal());
        const auto dofs = problem.element_dofs(e);
        for (int a = 0; a < 8; ++a) {
            for (int b = 0; b < 8; ++b) {
                triplets.emplace_back(dofs[a], dofs[b], scale * ke(a, b));
            }
        }
    }
    SparseMatrix k(problem.dofs(), problem.dofs());
    k.setFromTriplets(triplets.begin(), triplets.end());
    return k;
}

SparseMatrix assemble_stiffness(const DensityField& x, const FemProblem& problem) {
    return assemble_stiffness(x.values(), problem);
}

ComplianceResult solve_compliance(std::span<const double> x, const FemProblem& problem) {
    check_densities(x, problem);
    const auto& free = problem.free_dofs();
    const auto nfree = static_cast<Eigen::Index>(free.size());
    if (nfree == 0) {
        throw SolverError("all DOFs are fixed; nothing to solve");
    }
    Eigen::VectorXd f_red(nfree);
    for (Eigen::Index k = 0; k < nfree; ++k) {
        f_red(k) = problem.force()(free[static_cast<std::size_t>(k)]);
    }

    const auto& ke = problem.ke();
    const int elements = static_cast<int>(x.size());
    std::vector<double> scale(x.size());
    for (std::size_t e = 0; e < x.size(); ++e) {
        scale[e] = std::pow(x[e], problem.penal());
    }

    Eigen::VectorXd u_red;
    if (problem.d() <= kDenseSolveMaxSide) {
        Eigen::MatrixXd k_red = Eigen::MatrixXd::Zero(nfree, nfree);
        for (int e = 0; e < elements; ++e) {
            const auto dofs = problem.element_dofs(e);
            for (int a = 0; a < 8; ++a) {
                const int ra = problem.reduced_index(dofs[a]);
                if (ra < 0) continue;
                for (int b = 0; b < 8; ++b) {
                    const int rb = problem.reduced_index(dofs[b]);
                    if (rb >= 0) k_red(ra, rb) += scale[static_cast<std::size_t>(e)] * ke(a, b);
                }
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(k_red);
        if (llt.info() != Eigen::Success) {
            throw_singular(0.0, static_cast<int>(nfree));
        }
        check_pivots(llt.matrixLLT().diagonal().array().square(), static_cast<int>(nfree));
        u_red = llt.solve(f_red);
    } else {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(elements) * 64);
        for (int e = 0; e < elements; ++e) {
            const auto dofs = problem.element_dofs(e);
            for (int a = 0; a < 8; ++a) {
                const int ra = problem.reduced_index(dofs[a]);
                if (ra < 0) continue;
                for (int b = 0; b < 8; ++b) {
                    const int rb = problem.reduced_index(dofs[b]);
                    if (rb >= 0) triplets.emplace_back(ra, rb, scale[static_cast<std::size_t>(e)] * ke(a, b));
                }
            }
        }
        SparseMatrix k_red(nfree, nfree);
        k_red.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(k_red);
        if (ldlt.info() != Eigen::Success) {
            throw_singular(0.0, static_cast<int>(nfree));
        }
        check_pivots(ldlt.vectorD().array(), static_cast<int>(nfree));
        u_red = ldlt.solve(f_red);
        const double f_norm = f_red.norm();
        if (f_norm > 0.0) {
            const double residual = (k_red * u_red - f_red).norm() / f_norm;
            if (!(residual <= kResidualTolerance)) {
                throw SolverError("sparse solve residual " + std::to_string(residual) + " exceeds 1e-8");
            }
        }
    }

    ComplianceResult result;
    result.c = f_red.dot(u_red);
    result.u = Eigen::VectorXd::Zero(problem.dofs());
    for (Eigen::Index k = 0; k < nfree; ++k) {
        result.u(free[static_cast<std::size_t>(k)]) = u_red(k);
    }
    result.dc_dx.resize(x.size());
    const double p = problem.penal();
    for (int e = 0; e < elements; ++e) {
        const auto dofs = problem.element_dofs(e);
        Eigen::Matrix<double, 8, 1> ue;
        for (int a = 0; a < 8; ++a) {
            ue(a) = result.u(dofs[a]);
        }
        const double xe = x[static_cast<std::size_t>(e)];
        result.dc_dx[static_cast<std::size_t>(e)] = -p * std::pow(xe, p - 1.0) * ue.dot(ke * ue);
    }
    return result;
}

ComplianceResult solve_compliance(const DensityField& x, const FemProblem& problem) {
    return solve_compliance(x.values(), problem);
}

ComplianceResult solve_compliance(const DensityField& x, const BoundaryConditionSet& bc, double penal,
                                  Material material) {
    const FemProblem problem(x.level(), bc, penal, material, x.x_min());
    return solve_compliance(x.values(), problem);
}

void write_matrix_market(const SparseMatrix& k, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << k.rows() << ' ' << k.cols() << ' ' << k.nonZeros() << '\n';
    out.precision(17);
    for (int col = 0; col < k.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

}  // namespace pen::fem
