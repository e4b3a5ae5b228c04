// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "s3kit/error.hpp"
#include "s3kit/ops.hpp"

namespace s3kit {

namespace {

constexpr double kEmbedStd = 0.5;
constexpr double kHeadStd = 0.02;

template <typename T>
Tensor<T> normal_tensor(Shape shape, double std, RngStream& rng) {
    std::vector<T> data(shape_size(shape));
    for (auto& v : data) v = static_cast<T>(rng.normal() * std);
    return Tensor<T>(std::move(shape), std::move(data));
}

bool is_placeholder(TokenId id) {
    return id == Vocabulary::id(Special::image) || id == Vocabulary::id(Special::audio);
}

} // namespace

void LMConfig::validate() const {
    if (vocab_size == 0 || d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_seq_len == 0) {
        throw usage_error("language model dimensions must be positive");
    }
    if (d_model % n_heads != 0) throw usage_error("d_model must be divisible by n_heads");
}

void LoraConfig::validate() const {
    if (rank < 1) throw usage_error("LoRA rank must be at least 1");
    for (const auto& t : targets)
        if (t != "q" && t != "k" && t != "v" && t != "o") throw usage_error("unknown LoRA target '" + t + "'");
}

std::vector<std::uint8_t> make_loss_mask(std::span<const TokenId> ids, LossScope scope) {
    if (scope == LossScope::bot_responses) return bot_response_mask(ids);
    std::vector<std::uint8_t> mask(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) mask[t] = is_placeholder(ids[t]) ? 0 : 1;
    return mask;
}

template <typename T>
AssembledInput<T> assemble_inputs(const TokenStream& stream, std::span<const Tensor<T>> modality_embeddings,
                                  const Tensor<T>& table, LossScope scope) {
    if (modality_embeddings.size() != stream.modality_slots.size()) {
        throw data_error("assemble: " + std::to_string(stream.modality_slots.size()) + " modality slots but " +
                         std::to_string(modality_embeddings.size()) + " embedding blocks");
    }
    AssembledInput<T> out;
    out.ids = stream.ids;
    out.slots = stream.modality_slots;
    out.loss_mask = make_loss_mask(stream.ids, scope);
    out.embeddings = ops::embedding_lookup(table, stream.ids);
    for (const auto& slot : stream.modality_slots) {
        const auto& block = modality_embeddings[slot.object_index];
        if (block.rank() != 2 || block.dim(0) != slot.length) {
            throw data_error("assemble: block for object " + std::to_string(slot.object_index) + " has shape " +
                             shape_string(block.shape()) + ", slot expects " + std::to_string(slot.length) + " rows");
        }
        std::vector<std::size_t> rows(slot.length);
        std::iota(rows.begin(), rows.end(), slot.start);
        out.embeddings = ops::overwrite_rows(out.embeddings, rows, block);
    }
    return out;
}

template <typename T>
LanguageModel<T>::LanguageModel(LMConfig config, LoraConfig lora, RngStream& rng)
    : config_(config), lora_(std::move(lora)) {
    config_.validate();
    lora_.validate();
    const std::size_t d = config_.d_model;
    if (!lora_.targets.empty() && lora_.rank > d) {
        throw usage_error("LoRA rank " + std::to_string(lora_.rank) + " exceeds the projection size " + std::to_string(d));
    }
    const double in_std = 1.0 / std::sqrt(static_cast<double>(d));
    const double out_std = in_std / std::sqrt(2.0 * static_cast<double>(config_.n_layers));

    embed_ = normal_tensor<T>({config_.vocab_size, d}, kEmbedStd, rng);
    pos_ = normal_tensor<T>({config_.max_seq_len, d}, kEmbedStd, rng);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
        TransformerBlock<T> b;
        b.ln1_gain = Tensor<T>::filled({d}, T(1));
        b.ln1_bias = Tensor<T>::zeros({d});
        b.ln2_gain = Tensor<T>::filled({d}, T(1));
        b.ln2_bias = Tensor<T>::zeros({d});
        b.q = make_linear<T>(d, d, in_std, rng);
        b.k = make_linear<T>(d, d, in_std, rng);
        b.v = make_linear<T>(d, d, in_std, rng);
        b.o = make_linear<T>(d, d, out_std, rng);
        b.ff_in = make_linear<T>(d, config_.d_ff, in_std, rng);
        b.ff_out = make_linear<T>(config_.d_ff, d, 1.0 / std::sqrt(static_cast<double>(config_.d_ff)) /
                                                       std::sqrt(2.0 * static_cast<double>(config_.n_layers)),
                                  rng);
        for (const auto& target : lora_.targets) {
            b.lora[target] = {normal_tensor<T>({d, lora_.rank}, in_std, rng), Tensor<T>::zeros({lora_.rank, d})};
        }
        blocks_.push_back(std::move(b));
    }
    lnf_gain_ = Tensor<T>::filled({d}, T(1));
    lnf_bias_ = Tensor<T>::zeros({d});
    head_ = normal_tensor<T>({d, config_.vocab_size}, kHeadStd, rng);
    set_trainable(TrainableGroups{});
}

template <typename T>
Tensor<T> LanguageModel<T>::project(const Tensor<T>& x, const Linear<T>& linear, const TransformerBlock<T>& block,
                                    const char* name) const {
    Tensor<T> y = linear(x);
    if (auto it = block.lora.find(name); it != block.lora.end()) {
        const auto& adapter = it->second;
        y = ops::add(y, ops::scale(ops::matmul(ops::matmul(x, adapter.a), adapter.b), lora_.scaling()));
    }
    return y;
}

template <typename T>
Tensor<T> LanguageModel<T>::forward(const Tensor<T>& embeddings) const {
    if (embeddings.rank() != 2 || embeddings.dim(1) != config_.d_model) {
        throw usage_error("forward: embeddings must be [len, " + std::to_string(config_.d_model) + "]");
    }
    const std::size_t len = embeddings.dim(0);
    if (len == 0) throw data_error("forward: empty sequence");
    if (len > config_.max_seq_len) {
        throw data_error("forward: sequence of " + std::to_string(len) + " tokens exceeds max_seq_len " +
                         std::to_string(config_.max_seq_len));
    }
    std::vector<TokenId> positions(len);
    std::iota(positions.begin(), positions.end(), 0);
    Tensor<T> x = ops::add(embeddings, ops::embedding_lookup(pos_, positions));
    for (const auto& b : blocks_) {
        const Tensor<T> h = ops::layer_norm(x, b.ln1_gain, b.ln1_bias);
        const Tensor<T> attn = ops::causal_attention(project(h, b.q, b, "q"), project(h, b.k, b, "k"),
                                                     project(h, b.v, b, "v"), config_.n_heads);
        x = ops::add(x, project(attn, b.o, b, "o"));
        const Tensor<T> h2 = ops::layer_norm(x, b.ln2_gain, b.ln2_bias);
        x = ops::add(x, b.ff_out(ops::gelu(b.ff_in(h2))));
    }
    x = ops::layer_norm(x, lnf_gain_, lnf_bias_);
    return ops::matmul(x, head_);
}

template <typename T>
Tensor<T> LanguageModel<T>::loss(const AssembledInput<T>& input) const {
    const std::size_t len = input.ids.size();
    if (input.loss_mask.size() != len) throw usage_error("loss: mask length differs from token count");
    std::vector<TokenId> targets(len, 0);
    std::vector<std::uint8_t> select(len, 0);
    bool any = false;
    for (std::size_t t = 0; t + 1 < len; ++t) {
        if (!input.loss_mask[t + 1]) continue;
        targets[t] = input.ids[t + 1];
        select[t] = 1;
        any = true;
    }
    if (!any) throw data_error("loss: the loss mask selects no predictable token");
    return ops::softmax_cross_entropy(forward(input.embeddings), targets, select);
}

template <typename T>
void LanguageModel<T>::merge_lora() {
    const double s = lora_.scaling();
    for (auto& b : blocks_) {
        for (auto& [name, adapter] : b.lora) {
            Linear<T>& target = name == "q" ? b.q : name == "k" ? b.k : name == "v" ? b.v : b.o;
            const std::size_t in = adapter.a.dim(0), r = adapter.a.dim(1), out = adapter.b.dim(1);
            auto w = target.weight.data();
            for (std::size_t i = 0; i < in; ++i) {
                for (std::size_t j = 0; j < out; ++j) {
                    double delta = 0.0;
                    for (std::size_t p = 0; p < r; ++p)
                        delta += static_cast<double>(adapter.a.data()[i * r + p]) * adapter.b.data()[p * out + j];
                    w[i * out + j] = static_cast<T>(w[i * out + j] + s * delta);
                }
            }
        }
        b.lora.clear();
    }
}

template <typename T>
bool LanguageModel<T>::has_lora() const {
    return std::any_of(blocks_.begin(), blocks_.end(), [](const auto& b) { return !b.lora.empty(); });
}

template <typename T>
void LanguageModel<T>::set_trainable(const TrainableGroups& groups) {
    embed_.set_requires_grad(groups.embed);
    head_.set_requires_grad(groups.head);
    pos_.set_requires_grad(groups.base);
    lnf_gain_.set_requires_grad(groups.base);
    lnf_bias_.set_requires_grad(groups.base);
    for (auto& b : blocks_) {
        for (auto* t : {&b.ln1_gain, &b.ln1_bias, &b.ln2_gain, &b.ln2_bias}) t->set_requires_grad(groups.base);
        for (auto* l : {&b.q, &b.k, &b.v, &b.o, &b.ff_in, &b.ff_out}) {
            l->weight.set_requires_grad(groups.base);
            l->bias.set_requires_grad(groups.base);
        }
        for (auto& [name, adapter] : b.lora) {
            adapter.a.set_requires_grad(groups.lora);
            adapter.b.set_requires_grad(groups.lora);
        }
    }
}

template <typename T>
std::vector<NamedTensor<T>> LanguageModel<T>::named_parameters() const {
    std::vector<NamedTensor<T>> out{{"lm.embed", embed_}, {"lm.pos", pos_}};
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        const auto& b = blocks_[l];
        const std::string p = "lm.layer" + std::to_string(l) + ".";
        out.push_back({p + "ln1.gain", b.ln1_gain});
        out.push_back({p + "ln1.bias", b.ln1_bias});
        const std::pair<const char*, const Linear<T>*> linears[] = {
            {"attn.q", &b.q}, {"attn.k", &b.k}, {"attn.v", &b.v}, {"attn.o", &b.o}, {"mlp.in", &b.ff_in}, {"mlp.out", &b.ff_out}};
        for (const auto& [name, lin] : linears) {
            out.push_back({p + name + ".weight", lin->weight});
            out.push_back({p + name + ".bias", lin->bias});
        }
        out.push_back({p + "ln2.gain", b.ln2_gain});
        out.push_back({p + "ln2.bias", b.ln2_bias});
    }
    out.push_back({"lm.ln_f.gain", lnf_gain_});
    out.push_back({"lm.ln_f.bias", lnf_bias_});
    out.push_back({"lm.head", head_});
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
        for (const auto& [name, adapter] : blocks_[l].lora) {
            const std::string p = "lora." + std::to_string(l) + "." + name + ".";
            out.push_back({p + "A", adapter.a});
            out.push_back({p + "B", adapter.b});
        }
    }
    return out;
}

template AssembledInput<float> assemble_inputs(const TokenStream&, std::span<const Tensor<float>>, const Tensor<float>&,
                                               LossScope);
template AssembledInput<double> assemble_inputs(const TokenStream&, std::span<const Tensor<double>>,
                                                const Tensor<double>&, LossScope);
template class LanguageModel<float>;
template class LanguageModel<double>;

} // namespace s3kit
