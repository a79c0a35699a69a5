// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pen {

/// Lower bound for element densities; keeps the stiffness matrix regular.
inline constexpr double kDefaultXMin = 0.001;

using Matrix = Eigen::MatrixXd;  // column-major, so storage order equals the density vector layout
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Curriculum stage. Level 1 has d_inp elements per side, every further level doubles it.
struct Level {
    int lambda = 1;
    int d_inp = 8;

    [[nodiscard]] constexpr int d() const noexcept { return d_inp << (lambda - 1); }
    [[nodiscard]] constexpr int elements() const noexcept { return d() * d(); }
    [[nodiscard]] constexpr int nodes() const noexcept { return (d() + 1) * (d() + 1); }
    [[nodiscard]] constexpr int dofs() const noexcept { return 2 * nodes(); }
    /// Node stride between two level-1 nodes on this level's grid.
    [[nodiscard]] constexpr int stride() const noexcept { return 1 << (lambda - 1); }

    friend constexpr bool operator==(const Level&, const Level&) = default;
};

/// Element densities of a square mesh, column-major (x[i + d*j] is row i, column j).
/// Entries always lie in [x_min, 1].
class DensityField {
public:
    DensityField(Level level, std::vector<double> x, double x_min = kDefaultXMin);

    /// Builds a field from arbitrary values by clamping them into [x_min, 1].
    static DensityField clamped(Level level, std::span<const double> values, double x_min = kDefaultXMin);
    static DensityField uniform(Level level, double value, double x_min = kDefaultXMin);

    [[nodiscard]] const Level& level() const noexcept { return level_; }
    [[nodiscard]] int d() const noexcept { return level_.d(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return x_; }
    [[nodiscard]] double operator[](std::size_t i) const { return x_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }
    [[nodiscard]] double x_min() const noexcept { return x_min_; }

    /// Degree of filling: arithmetic mean of all densities.
    [[nodiscard]] double fill_degree() const;

private:
    Level level_;
    std::vector<double> x_;
    double x_min_;
};

/// Kinematic and static boundary conditions on the level-1 node grid.
///
/// All four matrices are (d_inp+1) x (d_inp+1); entry (i, j) belongs to the node in row i
/// (counted from the top) and column j (counted from the left). Forces are in N, positive y
/// points up.
struct BoundaryConditionSet {
    BoolMatrix rkx;
    BoolMatrix rky;
    Matrix rsx;
    Matrix rsy;

    /// Left edge fixed in x and y, no forces.
    static BoundaryConditionSet left_edge_clamp(int d_inp);

    [[nodiscard]] int d_inp() const noexcept { return static_cast<int>(rkx.rows()) - 1; }
    [[nodiscard]] bool is_fixed(int row, int col) const { return rkx(row, col) && rky(row, col); }
    [[nodiscard]] bool has_force() const;

    /// True when no force component acts along a fixed displacement direction.
    [[nodiscard]] bool is_consistent() const;
    /// Throws DimensionError for mismatched matrices.
    void check_dimensions() const;
};

struct InputSample {
    BoundaryConditionSet bc;
    double m_tar = 0.5;

    /// Predictor input: [Rk, Rs, m_tar].
    [[nodiscard]] std::vector<double> network_input() const;
};

/// Length of the predictor input vector for a given level-1 size.
[[nodiscard]] constexpr int input_width(int d_inp) noexcept {
    return 4 * (d_inp + 1) * (d_inp + 1) + 1;
}

/// Column-major reshape of a d^2 vector into a d x d matrix.
[[nodiscard]] Matrix reshape_to_matrix(std::span<const double> x);
/// Inverse of reshape_to_matrix.
[[nodiscard]] std::vector<double> reshape_to_vector(const Matrix& m);

struct FlatBoundaryConditions {
    std::vector<double> rk;
    std::vector<double> rs;
};

/// rk = [vec(rkx), vec(rky)], rs = [vec(rsx), vec(rsy)]; each of length 2 (d_inp+1)^2.
[[nodiscard]] FlatBoundaryConditions flatten_bcs(const BoundaryConditionSet& bc);
/// Inverse of flatten_bcs; any non-zero rk entry counts as fixed.
[[nodiscard]] BoundaryConditionSet unflatten_bcs(const FlatBoundaryConditions& flat);

/// Boundary conditions of a level-1 set mapped onto the node grid of `level`.
/// Level-1 nodes keep their conditions, nodes introduced by refinement are free.
[[nodiscard]] FlatBoundaryConditions map_bcs_to_level(const BoundaryConditionSet& bc, Level level);

/// Refines a field by one level; every element hands its density to its four children.
[[nodiscard]] DensityField upsample_field(const DensityField& field);

/// Number of elements per side for a density vector of length n; throws DimensionError if n is no square.
[[nodiscard]] int side_length(std::size_t n);

}  // namespace pen
