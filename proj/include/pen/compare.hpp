// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "pen/fem.hpp"
#include "pen/metrics.hpp"
#include "pen/predictor.hpp"
#include "pen/simp_ref.hpp"

namespace pen {

struct PhysicsSettings {
    double penal = 3.0;
    fem::Material material;
    double x_min = kDefaultXMin;
};

/// Predicts every record's geometry at the record's level and compares it with the stored
/// reference: mse, mae, kappa_0.01, fill deviation and compliance ratio (same FEM path for both).
/// Throws DimensionError when a record's level or d_inp does not fit the predictor.
[[nodiscard]] metrics::ComparisonReport compare_with_reference(const Predictor& predictor,
                                                               std::span<const simp::ValidationRecord> records,
                                                               const PhysicsSettings& physics = {});

}  // namespace pen
