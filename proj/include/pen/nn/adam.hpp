// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "pen/nn/tensor.hpp"

namespace pen::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates for every optimized tensor plus the step counter.
struct AdamState {
    std::int64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// Adam with bias correction (Kingma & Ba).
class Adam {
public:
    explicit Adam(std::vector<Tensor> params, AdamConfig config = {});

    /// Applies one update from the accumulated gradients. Throws TrainingError, leaving parameters and
    /// moments untouched, if any gradient is not finite.
    void step(double lr);
    void zero_grad();

    [[nodiscard]] const AdamState& state() const noexcept { return state_; }
    /// Replaces the moments; shapes must match the optimized tensors.
    void set_state(AdamState state);
    [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }

private:
    std::vector<Tensor> params_;
    AdamConfig config_;
    AdamState state_;
};

}  // namespace pen::nn
