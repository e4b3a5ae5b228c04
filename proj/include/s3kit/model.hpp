// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// The full shallow-alignment stack: frozen encoders, one projector per
// modality, and the adapter-tuned language model.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s3kit/chatfmt.hpp"
#include "s3kit/encoders.hpp"
#include "s3kit/lm.hpp"
#include "s3kit/projector.hpp"
#include "s3kit/tokenizer.hpp"

namespace s3kit {

struct ModelConfig {
    std::size_t d_enc = 64;
    std::size_t image_grid = 4;
    std::uint64_t image_seed = 0x696D67;
    std::uint64_t audio_seed = 0x617564;
    std::size_t n_modality_tokens = kDefaultModalityTokens;
    ProjectorConfig projector;
    LMConfig lm;
    LoraConfig lora;
    LossScope loss_scope = LossScope::bot_responses;

    /// Copies the shared dimensions (d_enc, d_model, n_tokens) into the
    /// projector config and validates everything.
    void normalize();
};

/// A dialog turned into tokens plus one feature matrix per modality slot.
struct PreparedDialog {
    TokenStream tokens;
    std::vector<FeatureMatrix> features;
};

class MultimodalModel {
public:
    /// Fresh model; LM and projector weights are drawn from `seed`.
    static MultimodalModel create(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const ImageEncoder& image_encoder() const { return image_encoder_; }
    const AudioEncoder& audio_encoder() const { return audio_encoder_; }
    const Projector<float>& projector(MessageKind kind) const;
    Projector<float>& projector(MessageKind kind);
    const LanguageModel<float>& lm() const { return lm_; }
    LanguageModel<float>& lm() { return lm_; }

    /// Resolves a media message against `media_root`. Paths ending in .s3ft
    /// are loaded as precomputed features; otherwise images are read as PPM
    /// and audio as WAV and run through the toy encoders.
    FeatureMatrix encode_media(const Message& message, const std::filesystem::path& media_root) const;

    PreparedDialog prepare(const Dialog& dialog, const std::filesystem::path& media_root) const;
    /// Same as prepare() but with precomputed features in media-message order.
    PreparedDialog prepare(const Dialog& dialog, std::vector<FeatureMatrix> features) const;

    AssembledInput<float> assemble(const PreparedDialog& prepared) const;
    Tensor<float> loss(const PreparedDialog& prepared) const;

    /// Greedy continuation of `context` as a bot turn, stopping at [/RS].
    std::string generate(const PreparedDialog& context, std::size_t max_new_tokens) const;

    /// log p(token | prefix) for each content byte of the final bot message
    /// under teacher forcing.
    std::vector<double> answer_log_probs(const PreparedDialog& prepared) const;

    /// Every tensor including frozen ones; encoder projections appear as
    /// enc.image.proj / enc.audio.proj, projectors as proj.image.* / proj.audio.*.
    std::vector<NamedTensor<float>> named_tensors() const;
    /// Overwrites values by name. Throws when a name is missing or a shape differs.
    void load_tensors(const std::vector<NamedTensor<float>>& tensors);

    void set_trainable(const TrainableGroups& lm_groups, bool projectors);
    /// Tensors that currently require grad, in named_tensors() order.
    std::vector<NamedTensor<float>> trainable_parameters() const;

private:
    MultimodalModel(ModelConfig config, ImageEncoder image, AudioEncoder audio, Projector<float> image_proj,
                    Projector<float> audio_proj, LanguageModel<float> lm);

    std::vector<Tensor<float>> project_all(const PreparedDialog& prepared) const;

    ModelConfig config_;
    ImageEncoder image_encoder_;
    AudioEncoder audio_encoder_;
    Projector<float> image_projector_;
    Projector<float> audio_projector_;
    LanguageModel<float> lm_;
};

} // namespace s3kit
