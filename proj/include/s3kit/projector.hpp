// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// MLP modality projector: FeatureMatrix (P x d_enc) -> n_tokens x d_model.
// Rows are aggregated first, so the number of output embeddings does not
// depend on P. The last layer emits n_tokens * d_model values which are cut
// into n_tokens consecutive chunks.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3kit/encoders.hpp"
#include "s3kit/optim.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/tensor.hpp"

namespace s3kit {

enum class Aggregation { mean_pool, flatten_fixed };

struct ProjectorConfig {
    std::size_t d_enc = 64;
    std::size_t d_hidden = 128;
    std::size_t d_model = 32;
    std::size_t n_tokens = 4;
    std::size_t hidden_layers = 1;
    Aggregation aggregation = Aggregation::mean_pool;
    /// Patch count expected under flatten_fixed.
    std::size_t fixed_rows = 0;

    void validate() const;
    std::size_t input_width() const { return aggregation == Aggregation::flatten_fixed ? fixed_rows * d_enc : d_enc; }
};

template <typename T>
struct Linear {
    Tensor<T> weight; // [in, out]
    Tensor<T> bias;   // [out]

    Tensor<T> operator()(const Tensor<T>& x) const;
};

/// Weight ~ N(0, std^2), bias zero.
template <typename T>
Linear<T> make_linear(std::size_t in, std::size_t out, double std, RngStream& rng);

template <typename T>
class Projector {
public:
    Projector(ProjectorConfig config, RngStream& rng);
    Projector(ProjectorConfig config, std::vector<Linear<T>> layers);

    /// [n_tokens, d_model]; row i is chunk i of the output layer.
    Tensor<T> project(const FeatureMatrix& features) const;
    std::vector<Tensor<T>> project_batch(std::span<const FeatureMatrix> batch) const;

    const ProjectorConfig& config() const { return config_; }
    std::vector<Linear<T>>& layers() { return layers_; }
    const std::vector<Linear<T>>& layers() const { return layers_; }

    /// "<prefix>.fc{i}.weight" / "<prefix>.fc{i}.bias"
    std::vector<NamedTensor<T>> named_parameters(std::string_view prefix) const;
    void set_requires_grad(bool on);

private:
    ProjectorConfig config_;
    std::vector<Linear<T>> layers_;
};

extern template class Projector<float>;
extern template class Projector<double>;

} // namespace s3kit
