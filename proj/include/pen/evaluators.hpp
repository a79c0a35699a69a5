// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "pen/domain.hpp"
#include "pen/fem.hpp"

namespace pen::eval {

/// How the checkerboard kernel response of one 3x3 window is turned into a magnitude.
enum class CheckerboardMode {
    kSignedWindow,  // |sum_ij X*H|, zero on uniform fields
    kPerTerm,       // sum_ij |X*H|
};

struct QualityCoefficients {
    double alpha = 2.0;  // compliance
    double beta = 5.0;   // fill deviation
    double gamma = 1.0;  // checkerboard
    double delta = 1.0;  // uncertainty
    double f_k = 3.0;    // checkerboard shaping
    double sigma2 = 0.05;
    CheckerboardMode checkerboard_mode = CheckerboardMode::kSignedWindow;
};

struct EvaluatorLosses {
    double c = 0.0;
    double m = 0.0;
    double f = 0.0;
    double p = 0.0;
};

/// A scalar loss together with its gradient w.r.t. the density vector.
struct ScalarWithGradient {
    double value = 0.0;
    std::vector<double> grad;
};

/// |m_tar - mean(x)|.
[[nodiscard]] double fill_deviation(std::span<const double> x, double m_tar);
[[nodiscard]] ScalarWithGradient fill_deviation_grad(std::span<const double> x, double m_tar);

/// Mean kernel response over all interior 3x3 windows of the column-major d x d field.
[[nodiscard]] double checkerboard_mean(std::span<const double> x,
                                       CheckerboardMode mode = CheckerboardMode::kSignedWindow);
/// (exp(mean * f_k) - 1) / (exp(f_k) - 1); requires d >= 3.
[[nodiscard]] double checkerboard_loss(std::span<const double> x, double f_k,
                                       CheckerboardMode mode = CheckerboardMode::kSignedWindow);
[[nodiscard]] ScalarWithGradient checkerboard_loss_grad(std::span<const double> x, double f_k,
                                                        CheckerboardMode mode = CheckerboardMode::kSignedWindow);

/// Mean of exp(-(x_i - 1/2)^2 / (2 sigma2)).
[[nodiscard]] double uncertainty_loss(std::span<const double> x, double sigma2);
[[nodiscard]] ScalarWithGradient uncertainty_loss_grad(std::span<const double> x, double sigma2);

/// (alpha c + 1)(beta M + 1)(gamma F + 1)(delta P + 1).
[[nodiscard]] double quality(const EvaluatorLosses& losses, const QualityCoefficients& coeff);
/// Partial derivatives of quality() w.r.t. (c, M, F, P).
[[nodiscard]] EvaluatorLosses quality_partials(const EvaluatorLosses& losses, const QualityCoefficients& coeff);

/// Arithmetic mean of the per-geometry quality values.
[[nodiscard]] double batch_objective(std::span<const double> qualities);

/// All four evaluators and f_Q for one geometry, with d(f_Q)/dx.
struct GeometryEvaluation {
    EvaluatorLosses losses;
    double quality = 0.0;
    std::vector<double> dquality_dx;
};

/// Evaluates a geometry whose densities already lie in [x_min, 1].
[[nodiscard]] GeometryEvaluation evaluate_geometry(std::span<const double> x, const fem::FemProblem& problem,
                                                   double m_tar, const QualityCoefficients& coeff);

}  // namespace pen::eval
