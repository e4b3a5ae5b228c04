// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over dense row-major arrays.
//
// A Tensor is a cheap handle to a shared node. Ops record their inputs and a
// backward closure on the result node; `backward()` sorts the graph reachable
// from a scalar root topologically and replays the closures in reverse. The
// graph is consumed by the replay, so it is rebuilt on every training step.
//
// Storage type is a template parameter. Training runs on float; the gradient
// checker instantiates the same code with double.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace s3kit {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty until something accumulates into it
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<T>& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
        return grad;
    }
};

} // namespace detail

template <typename T>
class Tensor {
public:
    using value_type = T;
    using NodePtr = std::shared_ptr<detail::Node<T>>;

    Tensor() = default;
    Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, T value, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->data.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    /// Leading dimension of a matrix; 1 for vectors and scalars.
    std::size_t rows() const;
    /// Trailing dimension; 1 for scalars.
    std::size_t cols() const;

    std::span<T> data() { return node_->data; }
    std::span<const T> data() const { return node_->data; }
    T item() const;
    T at(std::size_t r, std::size_t c) const { return node_->data[r * cols() + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) { node_->requires_grad = on; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    std::span<T> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad() { node_->grad.clear(); }

    /// Seeds d(this)/d(this) = 1 and propagates to every reachable input that
    /// requires grad. Only valid on single-element tensors.
    void backward() const;

    /// Fresh leaf with a copy of the data and no history.
    Tensor detach() const;

    const NodePtr& node() const { return node_; }
    static Tensor from_node(NodePtr node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

private:
    NodePtr node_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

/// Graph recording is on by default. While a guard is alive on a thread,
/// ops on that thread produce plain values with no history.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace s3kit
