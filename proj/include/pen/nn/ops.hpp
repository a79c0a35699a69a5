// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pen/nn/tensor.hpp"

namespace pen::nn {

// Differentiable operations. Image tensors are [batch, channels, rows, cols] in row-major order.

/// x [B, n] times w [n, m] plus bias [m].
[[nodiscard]] Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
/// Same-size 2-D convolution: x [B, Ci, H, W], kernel [Co, Ci, k, k] with odd k, bias [Co].
[[nodiscard]] Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias);
/// max(0, z) + slope * min(0, z) with one trainable slope (shape [1]).
[[nodiscard]] Tensor prelu(const Tensor& x, const Tensor& slope);
[[nodiscard]] Tensor sigmoid(const Tensor& x);
/// Clamps into [lo, hi]; the gradient is zero where the bound is active.
[[nodiscard]] Tensor clamp(const Tensor& x, double lo, double hi);
/// Non-overlapping k x k average pooling.
[[nodiscard]] Tensor avg_pool2d(const Tensor& x, std::size_t k);
/// Nearest-neighbour upsampling by an integer factor.
[[nodiscard]] Tensor upsample_nearest2d(const Tensor& x, std::size_t factor);
[[nodiscard]] Tensor add(const Tensor& a, const Tensor& b);
/// x [B, C, H, W] plus y [B, 1, H, W] broadcast over the channels.
[[nodiscard]] Tensor add_channel_broadcast(const Tensor& x, const Tensor& y);
[[nodiscard]] Tensor mul(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor reshape(const Tensor& x, Shape shape);
[[nodiscard]] Tensor sum(const Tensor& x);
[[nodiscard]] Tensor mean(const Tensor& x);

/// Value and gradient of an externally evaluated scalar function.
struct ExternalResult {
    double value = 0.0;
    std::vector<double> grad;
};
using ExternalFunction = std::function<ExternalResult(std::span<const double> values, const Shape& shape)>;

/// Scalar node whose value and input gradient come from `fn` (e.g. a finite-element adjoint).
[[nodiscard]] Tensor external_objective(const Tensor& x, const ExternalFunction& fn);

}  // namespace pen::nn
