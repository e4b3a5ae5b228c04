// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/tensor.hpp"

#include <unordered_set>

#include "s3kit/error.hpp"

namespace s3kit {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
    if (shape_size(shape) != data.size()) {
        throw usage_error("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                          shape_string(shape));
    }
    node_ = std::make_shared<detail::Node<T>>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return filled(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value, bool requires_grad) {
    std::vector<T> data(shape_size(shape), value);
    return Tensor(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::rows() const {
    return rank() >= 2 ? shape()[0] : 1;
}

template <typename T>
std::size_t Tensor<T>::cols() const {
    return rank() >= 1 ? shape().back() : 1;
}

template <typename T>
T Tensor<T>::item() const {
    if (size() != 1) throw usage_error("item() on tensor of shape " + shape_string(shape()));
    return node_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return Tensor(node_->shape, node_->data, false);
}

template <typename T>
void Tensor<T>::backward() const {
    if (size() != 1) throw usage_error("backward() requires a single-element tensor");
    if (!node_->requires_grad) return;

    // Iterative post-order DFS; reversed post-order is a valid replay order.
    using NodeT = detail::Node<T>;
    std::vector<std::shared_ptr<NodeT>> order;
    std::unordered_set<NodeT*> visited;
    std::vector<std::pair<std::shared_ptr<NodeT>, std::size_t>> stack{{node_, 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& top = stack.back();
        if (top.second < top.first->parents.size()) {
            std::shared_ptr<NodeT> parent = top.first->parents[top.second++];
            if (parent->requires_grad && visited.insert(parent.get()).second) stack.emplace_back(std::move(parent), 0);
        } else {
            order.push_back(std::move(top.first));
            stack.pop_back();
        }
    }

    node_->ensure_grad()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT& node = **it;
        if (node.backward && !node.grad.empty()) node.backward(node);
        node.backward = nullptr;
        node.parents.clear();
    }
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace s3kit
