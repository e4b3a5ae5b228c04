// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "s3kit/error.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/tensor.hpp"

namespace s3kit {

struct GradCheckOptions {
    double step = 1e-3;
    /// 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
    std::size_t max_coords_per_tensor = 0;
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::size_t worst_tensor = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of the scalar `f` against central
/// differences. Per coordinate the error is
/// |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|); the maximum is reported.
/// The differencing itself is done in double using the perturbation that was
/// actually representable in T.
template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> params,
                           const GradCheckOptions& options = {}) {
    for (auto& p : params) p.zero_grad();
    const Tensor<T> root = f();
    if (!std::isfinite(static_cast<double>(root.item()))) throw numeric_error("grad_check: non-finite function value");
    root.backward();

    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) {
        std::vector<double> g(p.size(), 0.0);
        if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), g.begin());
        for (double v : g)
            if (!std::isfinite(v)) throw numeric_error("grad_check: non-finite gradient");
        analytic.push_back(std::move(g));
    }

    auto evaluate = [&]() {
        NoGradGuard guard;
        const double v = f().item();
        if (!std::isfinite(v)) throw numeric_error("grad_check: non-finite function value under perturbation");
        return v;
    };

    RngStream rng(options.seed, 0x67726164);
    GradCheckResult result;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto data = params[t].data();
        std::vector<std::size_t> coords(data.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.max_coords_per_tensor != 0 && coords.size() > options.max_coords_per_tensor) {
            rng.shuffle(std::span<std::size_t>(coords));
            coords.resize(options.max_coords_per_tensor);
        }
        for (std::size_t idx : coords) {
            const T original = data[idx];
            const T plus = static_cast<T>(static_cast<double>(original) + options.step);
            const T minus = static_cast<T>(static_cast<double>(original) - options.step);
            data[idx] = plus;
            const double f_plus = evaluate();
            data[idx] = minus;
            const double f_minus = evaluate();
            data[idx] = original;
            const double numeric =
                (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
            const double ad = analytic[t][idx];
            const double err = std::abs(ad - numeric) / std::max(1e-8, std::abs(ad) + std::abs(numeric));
            ++result.coords_checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_tensor = t;
                result.worst_index = idx;
                result.worst_analytic = ad;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

} // namespace s3kit
