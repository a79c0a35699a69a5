// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/compare.hpp"

#include <chrono>
#include <cmath>

#include "pen/errors.hpp"

namespace pen {

metrics::ComparisonReport compare_with_reference(const Predictor& predictor,
                                                 std::span<const simp::ValidationRecord> records,
                                                 const PhysicsSettings& physics) {
    const auto& arch = predictor.architecture();
    metrics::ComparisonReport report;
    report.samples.reserve(records.size());
    for (const auto& r : records) {
        const Level level = r.x.level();
        if (level.d_inp != arch.d_inp || level.lambda > arch.max_level) {
            throw DimensionError("reference geometry at level " + std::to_string(level.lambda) + " with d_inp=" +
                                 std::to_string(level.d_inp) + " does not fit a model with d_inp=" +
                                 std::to_string(arch.d_inp) + " and " + std::to_string(arch.max_level) + " levels");
        }
        const auto t0 = std::chrono::steady_clock::now();
        const DensityField x = predictor.predict(r.sample, level.lambda, physics.x_min);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const fem::FemProblem problem(level, r.sample.bc, physics.penal, physics.material, physics.x_min);
        const double c = fem::solve_compliance(x, problem).c;

        metrics::SampleComparison s;
        s.mse = metrics::mse(x.values(), r.x.values());
        s.mae = metrics::mae(x.values(), r.x.values());
        s.kappa001 = metrics::kappa001(x.values(), r.x.values());
        s.fill_deviation = std::abs(x.fill_degree() - r.sample.m_tar);
        s.compliance_ratio = c / r.c;
        s.predict_seconds = seconds;
        report.samples.push_back(s);
    }
    return report;
}

}  // namespace pen
