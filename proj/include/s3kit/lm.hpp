// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tiny pre-norm causal transformer with LoRA adapters, and the input
// assembler that splices projector outputs over modality placeholders.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "s3kit/optim.hpp"
#include "s3kit/projector.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/tensor.hpp"
#include "s3kit/tokenizer.hpp"

namespace s3kit {

struct LMConfig {
    std::size_t vocab_size = Vocabulary::kSize;
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t d_ff = 128;
    std::size_t max_seq_len = 512;

    void validate() const;
};

struct LoraConfig {
    std::size_t rank = 4;
    double alpha = 8.0;
    /// Subset of {"q", "k", "v", "o"}.
    std::vector<std::string> targets{"q", "v"};

    double scaling() const { return alpha / static_cast<double>(rank); }
    void validate() const;
};

/// Adds scaling * (x A) B to a projection x W. A is [in, r], B is [r, out].
template <typename T>
struct LoraAdapter {
    Tensor<T> a;
    Tensor<T> b;
};

template <typename T>
struct TransformerBlock {
    Tensor<T> ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    Linear<T> q, k, v, o, ff_in, ff_out;
    std::map<std::string, LoraAdapter<T>> lora;
};

enum class LossScope {
    bot_responses, // bot content tokens plus the [/RS] closing each bot message
    all_tokens,    // every token except modality placeholders
};

template <typename T>
struct AssembledInput {
    Tensor<T> embeddings; // [len, d_model]
    std::vector<std::uint8_t> loss_mask;
    std::vector<TokenId> ids;
    std::vector<ModalitySlot> slots;
};

std::vector<std::uint8_t> make_loss_mask(std::span<const TokenId> ids, LossScope scope);

/// Looks up every id in `table`, then overwrites slot i's placeholder rows
/// with modality_embeddings[i] (one block per slot, in object order).
template <typename T>
AssembledInput<T> assemble_inputs(const TokenStream& stream, std::span<const Tensor<T>> modality_embeddings,
                                  const Tensor<T>& table, LossScope scope = LossScope::bot_responses);

/// Which parameter groups receive gradients.
struct TrainableGroups {
    bool embed = true;
    bool head = true;
    bool lora = true;
    bool base = false; // positions, norms, attention and MLP weights
};

template <typename T>
class LanguageModel {
public:
    LanguageModel(LMConfig config, LoraConfig lora, RngStream& rng);

    /// [len, d_model] embeddings -> [len, vocab] logits.
    Tensor<T> forward(const Tensor<T>& embeddings) const;

    /// Mean next-token cross-entropy at positions t whose successor t+1 is
    /// selected by the input's loss mask.
    Tensor<T> loss(const AssembledInput<T>& input) const;

    /// Folds every adapter into its projection and drops the adapters.
    void merge_lora();
    bool has_lora() const;

    void set_trainable(const TrainableGroups& groups);

    /// Names: lm.embed, lm.pos, lm.layer{i}.*, lm.ln_f.*, lm.head, lora.{i}.{proj}.A/B
    std::vector<NamedTensor<T>> named_parameters() const;

    const LMConfig& config() const { return config_; }
    const LoraConfig& lora_config() const { return lora_; }
    const Tensor<T>& embedding() const { return embed_; }
    const Tensor<T>& head() const { return head_; }
    std::vector<TransformerBlock<T>>& blocks() { return blocks_; }
    const std::vector<TransformerBlock<T>>& blocks() const { return blocks_; }

private:
    Tensor<T> project(const Tensor<T>& x, const Linear<T>& linear, const TransformerBlock<T>& block,
                      const char* name) const;

    LMConfig config_;
    LoraConfig lora_;
    Tensor<T> embed_;
    Tensor<T> pos_;
    std::vector<TransformerBlock<T>> blocks_;
    Tensor<T> lnf_gain_, lnf_bias_;
    Tensor<T> head_;
};

extern template class LanguageModel<float>;
extern template class LanguageModel<double>;

} // namespace s3kit
