// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pen/nn/tensor.hpp"
#include "pen/rng.hpp"

namespace pen::nn {

struct NamedParameter {
    std::string name;
    Tensor tensor;
};

/// Uniform Glorot initialization: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;
    Layer(const Layer&) = delete;
    Layer& operator=(const Layer&) = delete;

    /// Throws DimensionError naming this layer when the input shape does not fit.
    [[nodiscard]] virtual Tensor forward(const Tensor& x) const = 0;
    [[nodiscard]] virtual std::vector<NamedParameter> parameters() const { return {}; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

protected:
    [[noreturn]] void shape_error(const Tensor& x, const std::string& expected) const;

private:
    std::string name_;
};

/// Fully connected layer without activation: x W + b.
class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in, std::size_t out);

    [[nodiscard]] Tensor forward(const Tensor& x) const override;
    [[nodiscard]] std::vector<NamedParameter> parameters() const override;
    void initialize(Rng& rng);

    Tensor weights;  // [in, out]
    Tensor bias;     // [out]
};

/// Same-padded square convolution.
class Conv2D final : public Layer {
public:
    Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel = 3);

    [[nodiscard]] Tensor forward(const Tensor& x) const override;
    [[nodiscard]] std::vector<NamedParameter> parameters() const override;
    void initialize(Rng& rng);

    [[nodiscard]] std::size_t in_channels() const { return kernel.shape()[1]; }
    [[nodiscard]] std::size_t out_channels() const { return kernel.shape()[0]; }

    Tensor kernel;  // [out, in, k, k]
    Tensor bias;    // [out]
};

/// Parametric ReLU with a single trainable slope.
class PReLU final : public Layer {
public:
    explicit PReLU(std::string name, double initial_slope = 0.25);

    [[nodiscard]] Tensor forward(const Tensor& x) const override;
    [[nodiscard]] std::vector<NamedParameter> parameters() const override;

    Tensor slope;  // [1]
};

class Sigmoid final : public Layer {
public:
    using Layer::Layer;
    [[nodiscard]] Tensor forward(const Tensor& x) const override;
};

/// conv2(act(conv1(x))) + shortcut(x); the shortcut is a 1x1 projection when channels differ.
class ResNetBlock final : public Layer {
public:
    ResNetBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel = 3,
                double initial_slope = 0.25);

    [[nodiscard]] Tensor forward(const Tensor& x) const override;
    [[nodiscard]] std::vector<NamedParameter> parameters() const override;
    void initialize(Rng& rng);

    Conv2D conv1;
    PReLU act;
    Conv2D conv2;
    std::unique_ptr<Conv2D> projection;
};

/// Layers applied in order.
class Sequential final : public Layer {
public:
    using Layer::Layer;

    Sequential& add(std::unique_ptr<Layer> layer);
    [[nodiscard]] Tensor forward(const Tensor& x) const override;
    [[nodiscard]] std::vector<NamedParameter> parameters() const override;
    [[nodiscard]] std::size_t size() const noexcept { return layers_.size(); }
    [[nodiscard]] Layer& operator[](std::size_t i) { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace pen::nn
