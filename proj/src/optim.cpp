// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/optim.hpp"

#include <cmath>
#include <numbers>

#include "s3kit/error.hpp"

namespace s3kit {

template <typename T>
AdamW<T>::AdamW(std::vector<NamedTensor<T>> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), T(0));
        v_.emplace_back(p.tensor.size(), T(0));
    }
}

template <typename T>
void AdamW<T>::step(double lr) {
    for (const auto& p : params_) {
        if (!p.tensor.has_grad()) throw usage_error("adamw: parameter '" + p.name + "' has no gradient");
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double decay = 1.0 - lr * config_.weight_decay;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto tensor = params_[i].tensor;
        auto data = tensor.data();
        auto grad = tensor.grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = grad[j];
            const double mj = b1 * m[j] + (1.0 - b1) * g;
            const double vj = b2 * v[j] + (1.0 - b2) * g * g;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double update = (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
            data[j] = static_cast<T>(static_cast<double>(data[j]) * decay - lr * update);
        }
    }
}

template <typename T>
void AdamW<T>::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0, double lr_min) {
    if (total_steps < 1) throw usage_error("cosine_lr: total_steps must be at least 1");
    if (step > total_steps) {
        throw usage_error("cosine_lr: step " + std::to_string(step) + " beyond total " + std::to_string(total_steps));
    }
    const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

template class AdamW<float>;
template class AdamW<double>;

} // namespace s3kit
