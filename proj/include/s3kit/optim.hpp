// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3kit/tensor.hpp"

namespace s3kit {

template <typename T>
struct NamedTensor {
    std::string name;
    Tensor<T> tensor;
};

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// AdamW with decoupled weight decay and bias-corrected moments.
/// Moments are stored in the parameter type and updated in double.
template <typename T>
class AdamW {
public:
    AdamW(std::vector<NamedTensor<T>> params, AdamWConfig config = {});

    /// One update with learning rate `lr`. Every registered parameter must
    /// carry a gradient.
    void step(double lr);
    void zero_grad();

    const AdamWConfig& config() const { return config_; }
    std::uint64_t steps() const { return t_; }
    const std::vector<NamedTensor<T>>& params() const { return params_; }

    // Checkpoint access.
    std::vector<std::vector<T>>& first_moments() { return m_; }
    std::vector<std::vector<T>>& second_moments() { return v_; }
    const std::vector<std::vector<T>>& first_moments() const { return m_; }
    const std::vector<std::vector<T>>& second_moments() const { return v_; }
    void set_steps(std::uint64_t t) { t_ = t; }

private:
    std::vector<NamedTensor<T>> params_;
    AdamWConfig config_;
    std::vector<std::vector<T>> m_;
    std::vector<std::vector<T>> v_;
    std::uint64_t t_ = 0;
};

/// lr_min + (lr0 - lr_min) * (1 + cos(pi * step / total_steps)) / 2
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0, double lr_min = 0.0);

extern template class AdamW<float>;
extern template class AdamW<double>;

} // namespace s3kit
