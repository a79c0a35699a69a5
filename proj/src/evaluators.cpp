// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/evaluators.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "pen/errors.hpp"

namespace pen::eval {
namespace {

constexpr std::array<std::array<double, 3>, 3> kCheckerKernel{{
    {0.25, -0.25, 0.25},
    {-0.25, 0.0, -0.25},
    {0.25, -0.25, 0.25},
}};

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

int checked_side(std::span<const double> x) {
    const int d = side_length(x.size());
    if (d < 3) {
        throw DomainError("checkerboard filter needs d >= 3, got d = " + std::to_string(d));
    }
    return d;
}

// Fills V (d-2)^2 values and, if `grad` is non-empty, accumulates d(mean V)/dx.
double window_mean(std::span<const double> x, int d, CheckerboardMode mode, std::span<double> grad) {
    const int w = d - 2;
    const double inv = 1.0 / static_cast<double>(w * w);
    auto at = [&](int i, int j) { return x[static_cast<std::size_t>(i + d * j)]; };
    double total = 0.0;
    for (int q = 0; q < w; ++q) {
        for (int p = 0; p < w; ++p) {
            if (mode == CheckerboardMode::kSignedWindow) {
                double s = 0.0;
                for (int j = 0; j < 3; ++j) {
                    for (int i = 0; i < 3; ++i) {
                        s += at(p + i, q + j) * kCheckerKernel[i][j];
                    }
                }
                total += std::abs(s);
                if (!grad.empty()) {
                    const double g = sign(s) * inv;
                    for (int j = 0; j < 3; ++j) {
                        for (int i = 0; i < 3; ++i) {
                            grad[static_cast<std::size_t>(p + i + d * (q + j))] += g * kCheckerKernel[i][j];
                        }
                    }
                }
            } else {
                for (int j = 0; j < 3; ++j) {
                    for (int i = 0; i < 3; ++i) {
                        const double term = at(p + i, q + j) * kCheckerKernel[i][j];
                        total += std::abs(term);
                        if (!grad.empty()) {
                            grad[static_cast<std::size_t>(p + i + d * (q + j))] +=
                                sign(term) * kCheckerKernel[i][j] * inv;
                        }
                    }
                }
            }
        }
    }
    return total * inv;
}

}  // namespace

double fill_deviation(std::span<const double> x, double m_tar) {
    if (x.empty()) throw DimensionError("fill_deviation of an empty field");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    return std::abs(m_tar - mean);
}

ScalarWithGradient fill_deviation_grad(std::span<const double> x, double m_tar) {
    if (x.empty()) throw DimensionError("fill_deviation of an empty field");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    return {std::abs(m_tar - mean), std::vector<double>(x.size(), sign(mean - m_tar) / n)};
}

double checkerboard_mean(std::span<const double> x, CheckerboardMode mode) {
    const int d = checked_side(x);
    return window_mean(x, d, mode, {});
}

double checkerboard_loss(std::span<const double> x, double f_k, CheckerboardMode mode) {
    const double v = checkerboard_mean(x, mode);
    return std::expm1(v * f_k) / std::expm1(f_k);
}

ScalarWithGradient checkerboard_loss_grad(std::span<const double> x, double f_k, CheckerboardMode mode) {
    const int d = checked_side(x);
    ScalarWithGradient out{0.0, std::vector<double>(x.size(), 0.0)};
    const double v = window_mean(x, d, mode, out.grad);
    const double denom = std::expm1(f_k);
    out.value = std::expm1(v * f_k) / denom;
    const double outer = f_k * std::exp(v * f_k) / denom;
    for (double& g : out.grad) g *= outer;
    return out;
}

double uncertainty_loss(std::span<const double> x, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    if (x.empty()) throw DimensionError("uncertainty_loss of an empty field");
    double total = 0.0;
    for (double v : x) {
        total += std::exp(-(v - 0.5) * (v - 0.5) / (2.0 * sigma2));
    }
    return total / static_cast<double>(x.size());
}

ScalarWithGradient uncertainty_loss_grad(std::span<const double> x, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    if (x.empty()) throw DimensionError("uncertainty_loss of an empty field");
    const double n = static_cast<double>(x.size());
    ScalarWithGradient out{0.0, std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = x[i] - 0.5;
        const double g = std::exp(-t * t / (2.0 * sigma2));
        out.value += g;
        out.grad[i] = -g * t / sigma2 / n;
    }
    out.value /= n;
    return out;
}

double quality(const EvaluatorLosses& l, const QualityCoefficients& k) {
    return (k.alpha * l.c + 1.0) * (k.beta * l.m + 1.0) * (k.gamma * l.f + 1.0) * (k.delta * l.p + 1.0);
}

EvaluatorLosses quality_partials(const EvaluatorLosses& l, const QualityCoefficients& k) {
    const double fc = k.alpha * l.c + 1.0;
    const double fm = k.beta * l.m + 1.0;
    const double ff = k.gamma * l.f + 1.0;
    const double fp = k.delta * l.p + 1.0;
    return {k.alpha * fm * ff * fp, k.beta * fc * ff * fp, k.gamma * fc * fm * fp, k.delta * fc * fm * ff};
}

double batch_objective(std::span<const double> qualities) {
    if (qualities.empty()) throw DomainError("objective of an empty batch");
    return std::accumulate(qualities.begin(), qualities.end(), 0.0) / static_cast<double>(qualities.size());
}

GeometryEvaluation evaluate_geometry(std::span<const double> x, const fem::FemProblem& problem, double m_tar,
                                     const QualityCoefficients& coeff) {
    const auto comp = fem::solve_compliance(x, problem);
    const auto fill = fill_deviation_grad(x, m_tar);
    const auto checker = checkerboard_loss_grad(x, coeff.f_k, coeff.checkerboard_mode);
    const auto unc = uncertainty_loss_grad(x, coeff.sigma2);

    GeometryEvaluation ev;
    ev.losses = {comp.c, fill.value, checker.value, unc.value};
    ev.quality = quality(ev.losses, coeff);
    const auto dq = quality_partials(ev.losses, coeff);
    ev.dquality_dx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        ev.dquality_dx[i] = dq.c * comp.dc_dx[i] + dq.m * fill.grad[i] + dq.f * checker.grad[i] + dq.p * unc.grad[i];
    }
    return ev;
}

}  // namespace pen::eval
