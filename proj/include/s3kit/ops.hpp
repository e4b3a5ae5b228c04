// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations. Matrices are rank-2 row-major; vectors used as
// biases or norm gains are rank-1. Reductions accumulate in double.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s3kit/tensor.hpp"

namespace s3kit::ops {

/// [m,k] x [k,n] -> [m,n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Elementwise sum of equally shaped tensors.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

/// x[m,n] + bias[n], broadcast over rows.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// Elementwise product of equally shaped tensors.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, double factor);

/// Exact (erf) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);

/// Row-wise normalization of x[m,n] followed by gain[n] and bias[n].
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps = 1e-5);

/// Rows of table[V,d] selected by ids -> [len(ids), d].
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids);

/// Mean over rows t with mask[t] != 0 of -log softmax(logits[t])[targets[t]].
/// Throws if the mask selects nothing.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                                std::span<const std::uint8_t> mask);

/// Multi-head scaled dot-product attention where position i attends to j <= i.
/// q, k, v are [T, d] with heads laid out as contiguous column groups.
template <typename T>
Tensor<T> causal_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, std::size_t n_heads);

/// Copy of base[T,d] with rows[i] replaced by replacement row i.
template <typename T>
Tensor<T> overwrite_rows(const Tensor<T>& base, std::span<const std::size_t> rows, const Tensor<T>& replacement);

/// Column means of x[m,n] -> [1,n].
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Sum of all elements -> scalar.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

} // namespace s3kit::ops
