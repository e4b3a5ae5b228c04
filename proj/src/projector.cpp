// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/projector.hpp"

#include <cmath>

#include "s3kit/error.hpp"
#include "s3kit/ops.hpp"

namespace s3kit {

void ProjectorConfig::validate() const {
    if (d_enc == 0 || d_hidden == 0 || d_model == 0 || n_tokens == 0) {
        throw usage_error("projector dimensions must be positive");
    }
    if (aggregation == Aggregation::flatten_fixed && fixed_rows == 0) {
        throw usage_error("flatten_fixed aggregation needs a declared patch count");
    }
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
    return ops::add_bias(ops::matmul(x, weight), bias);
}

template <typename T>
Linear<T> make_linear(std::size_t in, std::size_t out, double std, RngStream& rng) {
    std::vector<T> w(in * out);
    for (auto& v : w) v = static_cast<T>(rng.normal() * std);
    return {Tensor<T>({in, out}, std::move(w)), Tensor<T>::zeros({out})};
}

template <typename T>
Projector<T>::Projector(ProjectorConfig config, RngStream& rng) : config_(config) {
    config_.validate();
    std::size_t in = config_.input_width();
    for (std::size_t i = 0; i < config_.hidden_layers; ++i) {
        layers_.push_back(make_linear<T>(in, config_.d_hidden, 1.0 / std::sqrt(static_cast<double>(in)), rng));
        in = config_.d_hidden;
    }
    // Output scale close to the token embedding scale.
    layers_.push_back(make_linear<T>(in, config_.n_tokens * config_.d_model, 0.02, rng));
    set_requires_grad(true);
}

template <typename T>
Projector<T>::Projector(ProjectorConfig config, std::vector<Linear<T>> layers)
    : config_(config), layers_(std::move(layers)) {
    config_.validate();
    if (layers_.empty()) throw usage_error("projector needs at least one layer");
    std::size_t in = config_.input_width();
    for (const auto& l : layers_) {
        if (l.weight.rank() != 2 || l.weight.dim(0) != in || l.bias.size() != l.weight.dim(1)) {
            throw usage_error("projector layer shapes do not chain");
        }
        in = l.weight.dim(1);
    }
    if (in != config_.n_tokens * config_.d_model) {
        throw usage_error("projector output width " + std::to_string(in) + " is not n_tokens * d_model");
    }
}

template <typename T>
Tensor<T> Projector<T>::project(const FeatureMatrix& features) const {
    validate_features(features);
    if (features.cols != config_.d_enc) {
        throw data_error("projector expects d_enc=" + std::to_string(config_.d_enc) + ", features have " +
                         std::to_string(features.cols) + " columns");
    }
    Tensor<T> x({features.rows, features.cols}, std::vector<T>(features.data.begin(), features.data.end()));
    if (config_.aggregation == Aggregation::mean_pool) {
        x = ops::mean_rows(x);
    } else {
        if (features.rows != config_.fixed_rows) {
            throw data_error("flatten_fixed projector expects " + std::to_string(config_.fixed_rows) + " rows, got " +
                             std::to_string(features.rows));
        }
        x = ops::reshape(x, {1, features.rows * features.cols});
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i](x);
        if (i + 1 < layers_.size()) x = ops::gelu(x);
    }
    return ops::reshape(x, {config_.n_tokens, config_.d_model});
}

template <typename T>
std::vector<Tensor<T>> Projector<T>::project_batch(std::span<const FeatureMatrix> batch) const {
    std::vector<Tensor<T>> out;
    out.reserve(batch.size());
    for (const auto& f : batch) out.push_back(project(f));
    return out;
}

template <typename T>
std::vector<NamedTensor<T>> Projector<T>::named_parameters(std::string_view prefix) const {
    std::vector<NamedTensor<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string base = std::string(prefix) + ".fc" + std::to_string(i);
        out.push_back({base + ".weight", layers_[i].weight});
        out.push_back({base + ".bias", layers_[i].bias});
    }
    return out;
}

template <typename T>
void Projector<T>::set_requires_grad(bool on) {
    for (auto& l : layers_) {
        l.weight.set_requires_grad(on);
        l.bias.set_requires_grad(on);
    }
}

template struct Linear<float>;
template struct Linear<double>;
template Linear<float> make_linear<float>(std::size_t, std::size_t, double, RngStream&);
template Linear<double> make_linear<double>(std::size_t, std::size_t, double, RngStream&);
template class Projector<float>;
template class Projector<double>;

} // namespace s3kit
