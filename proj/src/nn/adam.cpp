// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/nn/adam.hpp"

#include <cmath>
#include <string>

#include "pen/errors.hpp"

namespace pen::nn {

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
    state_.m.reserve(params_.size());
    state_.v.reserve(params_.size());
    for (const auto& p : params_) {
        state_.m.emplace_back(p.size(), 0.0);
        state_.v.emplace_back(p.size(), 0.0);
    }
}

void Adam::step(double lr) {
    if (!(lr > 0.0)) throw DomainError("learning rate must be positive");
    for (std::size_t k = 0; k < params_.size(); ++k) {
        for (double g : params_[k].grad()) {
            if (!std::isfinite(g)) {
                throw TrainingError("non-finite gradient in parameter tensor #" + std::to_string(k));
            }
        }
    }
    state_.t += 1;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state_.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state_.t));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto grad = params_[k].grad();
        if (grad.empty()) continue;  // parameter not reached by the last backward pass
        auto theta = params_[k].mutable_data();
        auto& m = state_.m[k];
        auto& v = state_.v[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Adam::set_state(AdamState state) {
    if (state.m.size() != params_.size() || state.v.size() != params_.size()) {
        throw DimensionError("Adam state holds " + std::to_string(state.m.size()) + " tensors, optimizer has " +
                             std::to_string(params_.size()));
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
        if (state.m[k].size() != params_[k].size() || state.v[k].size() != params_[k].size()) {
            throw DimensionError("Adam moment shape mismatch for parameter tensor #" + std::to_string(k));
        }
    }
    state_ = std::move(state);
}

}  // namespace pen::nn
