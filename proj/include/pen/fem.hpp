// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pen/domain.hpp"

namespace pen::fem {

/// Linear elastic, isotropic material (plane stress, unit thickness).
struct Material {
    double youngs_modulus = 195000.0;  // N/mm^2
    double poisson_ratio = 0.3;
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness of a unit square bilinear quad at unit density.
/// DOF order: bottom-left, bottom-right, top-right, top-left node, (x, y) each.
[[nodiscard]] ElementMatrix element_stiffness(const Material& material);

/// Maps Rs (x-block then y-block) onto the interleaved global DOF order: F[2i] = rs[i], F[2i+1] = rs[l+i].
[[nodiscard]] Eigen::VectorXd build_force_vector(std::span<const double> rs);

/// Mesh, boundary conditions and penalization of one compliance evaluation.
///
/// Nodes are numbered column by column from the top left corner, node (row r, column c) is
/// r + (d+1) c, and element e = r + d c. Both follow the 88-line convention.
class FemProblem {
public:
    /// `rk` and `rs` live on the node grid of `level` (see map_bcs_to_level).
    FemProblem(Level level, std::span<const double> rk, std::span<const double> rs, double penal = 3.0,
               Material material = {}, double x_min = kDefaultXMin);
    FemProblem(Level level, const BoundaryConditionSet& bc, double penal = 3.0, Material material = {},
               double x_min = kDefaultXMin);

    [[nodiscard]] const Level& level() const noexcept { return level_; }
    [[nodiscard]] int d() const noexcept { return level_.d(); }
    [[nodiscard]] int dofs() const noexcept { return level_.dofs(); }
    [[nodiscard]] double penal() const noexcept { return penal_; }
    [[nodiscard]] double x_min() const noexcept { return x_min_; }
    [[nodiscard]] const Material& material() const noexcept { return material_; }
    [[nodiscard]] const ElementMatrix& ke() const noexcept { return ke_; }
    [[nodiscard]] const Eigen::VectorXd& force() const noexcept { return force_; }
    [[nodiscard]] const std::vector<int>& free_dofs() const noexcept { return free_; }
    [[nodiscard]] const std::vector<int>& fixed_dofs() const noexcept { return fixed_; }
    /// Index of a global DOF in the reduced system, -1 for fixed DOFs.
    [[nodiscard]] int reduced_index(int dof) const { return reduced_[static_cast<std::size_t>(dof)]; }
    [[nodiscard]] std::array<int, 8> element_dofs(int element) const;

private:
    Level level_;
    double penal_;
    double x_min_;
    Material material_;
    ElementMatrix ke_;
    Eigen::VectorXd force_;
    std::vector<int> free_;
    std::vector<int> fixed_;
    std::vector<int> reduced_;
};

struct ComplianceResult {
    double c = 0.0;
    Eigen::VectorXd u;          // full displacement vector, zero at fixed DOFs
    std::vector<double> dc_dx;  // d(c)/d(x_i), never positive
};

/// K = sum_i x_i^p K_i over all DOFs (no reduction).
[[nodiscard]] SparseMatrix assemble_stiffness(std::span<const double> x, const FemProblem& problem);
[[nodiscard]] SparseMatrix assemble_stiffness(const DensityField& x, const FemProblem& problem);

/// Solves the reduced system and returns the mean compliance with its adjoint sensitivity.
/// Dense Cholesky up to d = 16, sparse LDLT above (residual checked against 1e-8).
/// Throws DomainError for densities outside [x_min, 1] and SolverError for singular systems.
[[nodiscard]] ComplianceResult solve_compliance(std::span<const double> x, const FemProblem& problem);
[[nodiscard]] ComplianceResult solve_compliance(const DensityField& x, const FemProblem& problem);
[[nodiscard]] ComplianceResult solve_compliance(const DensityField& x, const BoundaryConditionSet& bc,
                                                double penal = 3.0, Material material = {});

/// Matrix Market coordinate dump (debug aid).
void write_matrix_market(const SparseMatrix& k, std::ostream& out);

}  // namespace pen::fem
