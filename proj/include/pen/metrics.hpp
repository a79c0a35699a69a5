// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pen::metrics {

/// Mean squared elementwise difference. Throws DimensionError on length mismatch or empty input.
[[nodiscard]] double mse(std::span<const double> xp, std::span<const double> xv);
/// Mean absolute elementwise difference.
[[nodiscard]] double mae(std::span<const double> xp, std::span<const double> xv);
/// Fraction of elements with |xp - xv| <= tol (Heaviside with H(0) = 1, boundary matched up to 1e-12).
[[nodiscard]] double kappa001(std::span<const double> xp, std::span<const double> xv, double tol = 0.01);

/// One geometry pair's accuracy: ((1 - mse) + (1 - mae) + kappa001) / 3.
[[nodiscard]] double accuracy(std::span<const double> xp, std::span<const double> xv);

struct GeometryPair {
    std::span<const double> predicted;
    std::span<const double> reference;
};

/// Mean accuracy over all pairs. Throws DomainError for an empty list.
[[nodiscard]] double kappa(std::span<const GeometryPair> pairs);

/// Number of predictions after which training plus prediction is as fast as conventional
/// optimization: T_p / (t_TO - t_p). Throws DomainError when t_TO <= t_p.
[[nodiscard]] double break_even(double training_seconds, double predict_seconds, double optimize_seconds);
/// Average time per geometry including amortized training: T_p / e_p + t_p.
[[nodiscard]] double t_pen(double training_seconds, double predict_seconds, double predictions);

struct Stats {
    double mean = 0.0;
    double sd = 0.0;  // population standard deviation
};
[[nodiscard]] Stats stats(std::span<const double> v);

struct SampleComparison {
    double mse = 0.0;
    double mae = 0.0;
    double kappa001 = 0.0;
    double fill_deviation = 0.0;     // |mean(xp) - m_tar|
    double compliance_ratio = 0.0;   // c_pred / c_ref
    double predict_seconds = 0.0;
    double reference_seconds = 0.0;  // 0 when the reference was loaded from disk
};

struct ComparisonReport {
    std::vector<SampleComparison> samples;

    [[nodiscard]] double kappa() const;
    [[nodiscard]] Stats mse() const;
    [[nodiscard]] Stats mae() const;
    [[nodiscard]] Stats kappa001() const;
    [[nodiscard]] Stats fill_deviation() const;
    [[nodiscard]] Stats compliance_ratio() const;
    [[nodiscard]] Stats predict_seconds() const;

    [[nodiscard]] nlohmann::json to_json() const;
    /// Plain text table: one row per indicator with mean and SD.
    [[nodiscard]] std::string table() const;
};

}  // namespace pen::metrics
