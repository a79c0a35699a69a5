// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pen/domain.hpp"
#include "pen/nn/layers.hpp"
#include "pen/rng.hpp"

namespace pen {

/// Sizes of the predictor network. The defaults give the full 8/16/32/64 model.
struct ArchitectureConfig {
    int d_inp = 8;
    std::vector<int> dense_widths{512, 1024, 2048, 4096};  // last = channels * d_inp^2
    int channels = 64;
    int kernel = 3;
    int level1_convs = 2;  // the last level-1 convolution maps to a single channel
    int max_level = 4;
    double prelu_init = 0.25;
    double force_scale = 100.0;  // force inputs are divided by this before entering the network

    [[nodiscard]] int input_width() const noexcept { return pen::input_width(d_inp); }
    /// Throws ConfigError if the sizes are inconsistent.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
    static ArchitectureConfig from_json(const nlohmann::json& j);

    friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

/// The multi-level predictor X = f_p(Wp, Rk, Rs, Mtar).
///
/// A dense trunk maps the input vector to channels x d_inp x d_inp features. Level 1 applies
/// plain convolutions. Every further level adds the upsampled trunk features to the upsampled
/// pre-sigmoid output of the level below, then applies one residual block and an output
/// convolution. A level-k prediction therefore reuses all parameters of levels 1..k-1.
class Predictor {
public:
    /// All parameters zero.
    explicit Predictor(ArchitectureConfig arch);
    /// Glorot-uniform weights, zero biases, PReLU slopes at prelu_init; rounded to float32.
    Predictor(ArchitectureConfig arch, Rng& rng);
    ~Predictor();
    Predictor(Predictor&&) noexcept;
    Predictor& operator=(Predictor&&) noexcept;

    /// input [B, input_width] -> densities [B, d^2] in (0, 1), column-major per sample.
    [[nodiscard]] nn::Tensor forward(const nn::Tensor& input, int level) const;
    /// Single prediction without graph recording, clamped into [x_min, 1].
    [[nodiscard]] DensityField predict(const InputSample& sample, int level, double x_min = kDefaultXMin) const;
    /// Batch input tensor from samples: [Rk, Rs / force_scale, m_tar] per row.
    [[nodiscard]] nn::Tensor make_input(std::span<const InputSample> samples) const;

    /// Every trainable tensor in a fixed order.
    [[nodiscard]] std::vector<nn::NamedParameter> parameters() const;
    /// The tensors a prediction at `level` depends on.
    [[nodiscard]] std::vector<nn::NamedParameter> parameters_up_to(int level) const;
    [[nodiscard]] std::size_t parameter_count() const;
    /// Rounds every parameter to the nearest float32; models are stored in single precision.
    void quantize_to_float32();

    [[nodiscard]] const ArchitectureConfig& architecture() const noexcept { return arch_; }
    /// SHA-256 over the architecture and the parameter names and shapes.
    [[nodiscard]] std::string architecture_hash() const;

private:
    struct Impl;
    ArchitectureConfig arch_;
    std::unique_ptr<Impl> impl_;

    void initialize(Rng& rng);
};

}  // namespace pen
