// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/nn/layers.hpp"

#include <cmath>

#include "pen/errors.hpp"
#include "pen/nn/ops.hpp"

namespace pen::nn {

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : t.mutable_data()) v = rng.uniform(-limit, limit);
}

void Layer::shape_error(const Tensor& x, const std::string& expected) const {
    throw DimensionError("layer '" + name_ + "': expected input " + expected + ", got " + to_string(x.shape()));
}

Dense::Dense(std::string name, std::size_t in, std::size_t out)
    : Layer(std::move(name)), weights(Tensor::zeros({in, out}, true)), bias(Tensor::zeros({out}, true)) {}

Tensor Dense::forward(const Tensor& x) const {
    const auto in = weights.shape()[0];
    if (x.shape().size() != 2 || x.shape()[1] != in) shape_error(x, "[B," + std::to_string(in) + "]");
    return linear(x, weights, bias);
}

std::vector<NamedParameter> Dense::parameters() const {
    return {{name() + ".weight", weights}, {name() + ".bias", bias}};
}

void Dense::initialize(Rng& rng) {
    glorot_uniform(weights, weights.shape()[0], weights.shape()[1], rng);
    std::fill(bias.mutable_data().begin(), bias.mutable_data().end(), 0.0);
}

Conv2D::Conv2D(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t k)
    : Layer(std::move(name)),
      kernel(Tensor::zeros({out_channels, in_channels, k, k}, true)),
      bias(Tensor::zeros({out_channels}, true)) {
    if (k % 2 == 0) throw DimensionError("layer '" + this->name() + "': kernel size must be odd");
}

Tensor Conv2D::forward(const Tensor& x) const {
    if (x.shape().size() != 4 || x.shape()[1] != in_channels()) {
        shape_error(x, "[B," + std::to_string(in_channels()) + ",H,W]");
    }
    return conv2d(x, kernel, bias);
}

std::vector<NamedParameter> Conv2D::parameters() const {
    return {{name() + ".kernel", kernel}, {name() + ".bias", bias}};
}

void Conv2D::initialize(Rng& rng) {
    const auto& s = kernel.shape();
    const std::size_t taps = s[2] * s[3];
    glorot_uniform(kernel, s[1] * taps, s[0] * taps, rng);
    std::fill(bias.mutable_data().begin(), bias.mutable_data().end(), 0.0);
}

PReLU::PReLU(std::string name, double initial_slope)
    : Layer(std::move(name)), slope(Tensor({1}, {initial_slope}, true)) {}

Tensor PReLU::forward(const Tensor& x) const { return prelu(x, slope); }

std::vector<NamedParameter> PReLU::parameters() const { return {{name() + ".slope", slope}}; }

Tensor Sigmoid::forward(const Tensor& x) const { return sigmoid(x); }

ResNetBlock::ResNetBlock(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                         double initial_slope)
    : Layer(name),
      conv1(name + ".conv1", in_channels, out_channels, kernel),
      act(name + ".act", initial_slope),
      conv2(name + ".conv2", out_channels, out_channels, kernel) {
    if (in_channels != out_channels) {
        projection = std::make_unique<Conv2D>(name + ".projection", in_channels, out_channels, 1);
    }
}

Tensor ResNetBlock::forward(const Tensor& x) const {
    if (x.shape().size() != 4 || x.shape()[1] != conv1.in_channels()) {
        shape_error(x, "[B," + std::to_string(conv1.in_channels()) + ",H,W]");
    }
    Tensor branch = conv2.forward(act.forward(conv1.forward(x)));
    return add(branch, projection ? projection->forward(x) : x);
}

std::vector<NamedParameter> ResNetBlock::parameters() const {
    auto params = conv1.parameters();
    for (auto& p : act.parameters()) params.push_back(std::move(p));
    for (auto& p : conv2.parameters()) params.push_back(std::move(p));
    if (projection) {
        for (auto& p : projection->parameters()) params.push_back(std::move(p));
    }
    return params;
}

void ResNetBlock::initialize(Rng& rng) {
    conv1.initialize(rng);
    conv2.initialize(rng);
    if (projection) projection->initialize(rng);
}

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
}

Tensor Sequential::forward(const Tensor& x) const {
    Tensor h = x;
    for (const auto& layer : layers_) h = layer->forward(h);
    return h;
}

std::vector<NamedParameter> Sequential::parameters() const {
    std::vector<NamedParameter> params;
    for (const auto& layer : layers_) {
        for (auto& p : layer->parameters()) params.push_back(std::move(p));
    }
    return params;
}

}  // namespace pen::nn
