// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pen::nn {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t numel(const Shape& shape) noexcept;
[[nodiscard]] std::string to_string(const Shape& shape);

/// One vertex of the recorded computation. Owned through Tensor handles.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a backward pass reaches the node
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    // Accumulates this node's grad into the parents' grads.
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

/// Dense row-major array of doubles with optional reverse-mode gradient tracking.
///
/// Copies share the underlying node. Operations on tensors that require gradients record
/// themselves so that backward() on a scalar result fills the grad of every leaf on the path.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// Result of an operation; records `parents` and `backward_fn` when any parent needs gradients.
    static Tensor from_op(Shape shape, std::vector<double> value, std::vector<Tensor> const& parents,
                          std::function<void(Node&)> backward_fn);

    [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
    [[nodiscard]] const Shape& shape() const;
    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::span<const double> data() const;
    [[nodiscard]] std::span<double> mutable_data();
    [[nodiscard]] std::span<const double> grad() const;
    [[nodiscard]] std::span<double> mutable_grad();
    [[nodiscard]] double item() const;
    [[nodiscard]] bool requires_grad() const;

    void zero_grad();

    /// Reverse pass from this scalar. Leaf gradients accumulate across calls.
    void backward() const;

    [[nodiscard]] const std::shared_ptr<Node>& node() const noexcept { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    std::shared_ptr<Node> node_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

    [[nodiscard]] static bool grad_enabled() noexcept;

private:
    bool previous_;
};

}  // namespace pen::nn
