// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/nn/tensor.hpp"

#include <numeric>
#include <unordered_set>

#include "pen/errors.hpp"

namespace pen::nn {
namespace {

thread_local bool g_grad_enabled = true;

}  // namespace

std::size_t numel(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) : node_(std::make_shared<Node>()) {
    if (numel(shape) != data.size()) {
        throw DimensionError("tensor of shape " + to_string(shape) + " cannot hold " + std::to_string(data.size()) +
                             " values");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const auto n = numel(shape);
    return {std::move(shape), std::vector<double>(n, 0.0), requires_grad};
}

Tensor Tensor::scalar(double value, bool requires_grad) { return {{}, {value}, requires_grad}; }

Tensor Tensor::from_op(Shape shape, std::vector<double> value, std::vector<Tensor> const& parents,
                       std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->is_leaf = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) {
            if (p.requires_grad()) {
                node->requires_grad = true;
                break;
            }
        }
    }
    if (node->requires_grad) {
        node->parents.reserve(parents.size());
        for (const auto& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

const Shape& Tensor::shape() const {
    if (!node_) throw StateError("undefined tensor");
    return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::data() const {
    if (!node_) throw StateError("undefined tensor");
    return node_->value;
}

std::span<double> Tensor::mutable_data() {
    if (!node_) throw StateError("undefined tensor");
    return node_->value;
}

std::span<const double> Tensor::grad() const {
    if (!node_) throw StateError("undefined tensor");
    return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
    if (!node_) throw StateError("undefined tensor");
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item() on a tensor of shape " + to_string(shape()));
    return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::zero_grad() {
    if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
    if (!node_) throw StateError("backward on an undefined tensor");
    if (node_->value.size() != 1) {
        throw DimensionError("backward needs a scalar objective, got shape " + to_string(node_->shape));
    }
    if (!node_->requires_grad) {
        throw StateError("backward without a recorded forward pass: the objective does not depend on any "
                         "tensor that requires gradients");
    }
    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    for (Node* n : order) {
        if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->is_leaf || !n->backward_fn) continue;
        for (auto& p : n->parents) {
            if (p->requires_grad) p->ensure_grad();
        }
        n->backward_fn(*n);
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool NoGradGuard::grad_enabled() noexcept { return g_grad_enabled; }

}  // namespace pen::nn
