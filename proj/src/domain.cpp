// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pen/errors.hpp"

namespace pen {

DensityField::DensityField(Level level, std::vector<double> x, double x_min)
    : level_(level), x_(std::move(x)), x_min_(x_min) {
    if (static_cast<int>(x_.size()) != level_.elements()) {
        throw DimensionError("density field of level " + std::to_string(level_.lambda) + " needs " +
                             std::to_string(level_.elements()) + " values, got " +
                             std::to_string(x_.size()));
    }
    for (double v : x_) {
        if (!(v >= x_min_ && v <= 1.0)) {
            throw DomainError("density " + std::to_string(v) + " outside [x_min, 1]");
        }
    }
}

DensityField DensityField::clamped(Level level, std::span<const double> values, double x_min) {
    std::vector<double> x(values.begin(), values.end());
    for (double& v : x) {
        v = std::clamp(v, x_min, 1.0);
    }
    return {level, std::move(x), x_min};
}

DensityField DensityField::uniform(Level level, double value, double x_min) {
    return {level, std::vector<double>(static_cast<std::size_t>(level.elements()), value), x_min};
}

double DensityField::fill_degree() const {
    return std::accumulate(x_.begin(), x_.end(), 0.0) / static_cast<double>(x_.size());
}

BoundaryConditionSet BoundaryConditionSet::left_edge_clamp(int d_inp) {
    const int n = d_inp + 1;
    BoundaryConditionSet bc{BoolMatrix::Constant(n, n, false), BoolMatrix::Constant(n, n, false),
                            Matrix::Zero(n, n), Matrix::Zero(n, n)};
    bc.rkx.col(0).setConstant(true);
    bc.rky.col(0).setConstant(true);
    return bc;
}

bool BoundaryConditionSet::has_force() const {
    return (rsx.array() != 0.0).any() || (rsy.array() != 0.0).any();
}

bool BoundaryConditionSet::is_consistent() const {
    for (Eigen::Index j = 0; j < rkx.cols(); ++j) {
        for (Eigen::Index i = 0; i < rkx.rows(); ++i) {
            if ((rkx(i, j) && rsx(i, j) != 0.0) || (rky(i, j) && rsy(i, j) != 0.0)) {
                return false;
            }
        }
    }
    return true;
}

void BoundaryConditionSet::check_dimensions() const {
    const auto n = rkx.rows();
    auto square = [n](auto const& m) { return m.rows() == n && m.cols() == n; };
    if (n < 2 || !square(rkx) || !square(rky) || !square(rsx) || !square(rsy)) {
        throw DimensionError("boundary condition matrices must all be (d_inp+1) x (d_inp+1)");
    }
}

std::vector<double> InputSample::network_input() const {
    auto flat = flatten_bcs(bc);
    std::vector<double> z;
    z.reserve(flat.rk.size() + flat.rs.size() + 1);
    z.insert(z.end(), flat.rk.begin(), flat.rk.end());
    z.insert(z.end(), flat.rs.begin(), flat.rs.end());
    z.push_back(m_tar);
    return z;
}

int side_length(std::size_t n) {
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (n == 0 || d * d != n) {
        throw DimensionError("length " + std::to_string(n) + " is not a perfect square");
    }
    return static_cast<int>(d);
}

Matrix reshape_to_matrix(std::span<const double> x) {
    const int d = side_length(x.size());
    return Eigen::Map<const Matrix>(x.data(), d, d);
}

std::vector<double> reshape_to_vector(const Matrix& m) {
    if (m.rows() != m.cols() || m.size() == 0) {
        throw DimensionError("reshape_to_vector needs a non-empty square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    return {m.data(), m.data() + m.size()};
}

FlatBoundaryConditions flatten_bcs(const BoundaryConditionSet& bc) {
    bc.check_dimensions();
    const auto l = static_cast<std::size_t>(bc.rkx.size());
    FlatBoundaryConditions flat{std::vector<double>(2 * l), std::vector<double>(2 * l)};
    for (std::size_t k = 0; k < l; ++k) {
        flat.rk[k] = bc.rkx.data()[k] ? 1.0 : 0.0;
        flat.rk[l + k] = bc.rky.data()[k] ? 1.0 : 0.0;
        flat.rs[k] = bc.rsx.data()[k];
        flat.rs[l + k] = bc.rsy.data()[k];
    }
    return flat;
}

BoundaryConditionSet unflatten_bcs(const FlatBoundaryConditions& flat) {
    if (flat.rk.size() != flat.rs.size() || flat.rk.size() % 2 != 0) {
        throw DimensionError("rk and rs must have the same even length, got " + std::to_string(flat.rk.size()) +
                             " and " + std::to_string(flat.rs.size()));
    }
    const std::size_t l = flat.rk.size() / 2;
    const int n = side_length(l);
    if (n < 2) throw DimensionError("boundary conditions need at least a 2x2 node grid");
    BoundaryConditionSet bc{BoolMatrix(n, n), BoolMatrix(n, n), Matrix(n, n), Matrix(n, n)};
    for (std::size_t k = 0; k < l; ++k) {
        bc.rkx.data()[k] = flat.rk[k] != 0.0;
        bc.rky.data()[k] = flat.rk[l + k] != 0.0;
        bc.rsx.data()[k] = flat.rs[k];
        bc.rsy.data()[k] = flat.rs[l + k];
    }
    return bc;
}

FlatBoundaryConditions map_bcs_to_level(const BoundaryConditionSet& bc, Level level) {
    bc.check_dimensions();
    if (bc.d_inp() != level.d_inp) {
        throw DimensionError("boundary conditions are defined for d_inp=" + std::to_string(bc.d_inp()) +
                             " but level uses d_inp=" + std::to_string(level.d_inp));
    }
    const int n1 = level.d_inp + 1;
    const int n = level.d() + 1;
    const int s = level.stride();
    const auto l = static_cast<std::size_t>(n) * n;
    FlatBoundaryConditions flat{std::vector<double>(2 * l, 0.0), std::vector<double>(2 * l, 0.0)};
    for (int j = 0; j < n1; ++j) {
        for (int i = 0; i < n1; ++i) {
            const auto node = static_cast<std::size_t>(i * s + n * (j * s));
            flat.rk[node] = bc.rkx(i, j) ? 1.0 : 0.0;
            flat.rk[l + node] = bc.rky(i, j) ? 1.0 : 0.0;
            flat.rs[node] = bc.rsx(i, j);
            flat.rs[l + node] = bc.rsy(i, j);
        }
    }
    return flat;
}

DensityField upsample_field(const DensityField& field) {
    const int d = field.d();
    const Level fine{field.level().lambda + 1, field.level().d_inp};
    const int dd = fine.d();
    std::vector<double> x(static_cast<std::size_t>(dd) * dd);
    for (int j = 0; j < dd; ++j) {
        for (int i = 0; i < dd; ++i) {
            x[static_cast<std::size_t>(i + dd * j)] = field[static_cast<std::size_t>(i / 2 + d * (j / 2))];
        }
    }
    return {fine, std::move(x), field.x_min()};
}

}  // namespace pen
