// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "s3kit/error.hpp"
#include "s3kit/ops.hpp"

namespace s3kit {

void ModelConfig::normalize() {
    projector.d_enc = d_enc;
    projector.d_model = lm.d_model;
    projector.n_tokens = n_modality_tokens;
    if (image_grid == 0 || n_modality_tokens == 0) throw usage_error("image grid and modality token count must be positive");
    if (projector.aggregation == Aggregation::flatten_fixed && projector.fixed_rows == 0)
        projector.fixed_rows = image_grid * image_grid;
    projector.validate();
    lm.validate();
    lora.validate();
}

MultimodalModel::MultimodalModel(ModelConfig config, ImageEncoder image, AudioEncoder audio,
                                 Projector<float> image_proj, Projector<float> audio_proj, LanguageModel<float> lm)
    : config_(std::move(config)),
      image_encoder_(std::move(image)),
      audio_encoder_(std::move(audio)),
      image_projector_(std::move(image_proj)),
      audio_projector_(std::move(audio_proj)),
      lm_(std::move(lm)) {}

MultimodalModel MultimodalModel::create(ModelConfig config, std::uint64_t seed) {
    config.normalize();
    RngStream image_rng(seed, 1), audio_rng(seed, 2), lm_rng(seed, 3);
    return MultimodalModel(config, ImageEncoder(config.d_enc, config.image_grid, config.image_seed),
                           AudioEncoder(config.d_enc, config.audio_seed), Projector<float>(config.projector, image_rng),
                           Projector<float>(config.projector, audio_rng),
                           LanguageModel<float>(config.lm, config.lora, lm_rng));
}

const Projector<float>& MultimodalModel::projector(MessageKind kind) const {
    if (kind == MessageKind::text) throw usage_error("text has no projector");
    return kind == MessageKind::image ? image_projector_ : audio_projector_;
}

Projector<float>& MultimodalModel::projector(MessageKind kind) {
    if (kind == MessageKind::text) throw usage_error("text has no projector");
    return kind == MessageKind::image ? image_projector_ : audio_projector_;
}

FeatureMatrix MultimodalModel::encode_media(const Message& message, const std::filesystem::path& media_root) const {
    if (message.kind == MessageKind::text) throw usage_error("encode_media called on a text message");
    const std::string& ref = message.content;
    if (ref.find("://") != std::string::npos) throw data_error("cannot resolve remote media '" + ref + "'");
    std::filesystem::path path = ref;
    if (path.is_relative() && !media_root.empty()) path = media_root / path;
    if (path.extension() == ".s3ft") return load_features(path);
    if (message.kind == MessageKind::image) return image_encoder_.encode(read_ppm(path));
    return audio_encoder_.encode(read_wav(path));
}

PreparedDialog MultimodalModel::prepare(const Dialog& dialog, const std::filesystem::path& media_root) const {
    std::vector<FeatureMatrix> features;
    for (const auto& m : dialog.messages)
        if (m.kind != MessageKind::text) features.push_back(encode_media(m, media_root));
    return prepare(dialog, std::move(features));
}

PreparedDialog MultimodalModel::prepare(const Dialog& dialog, std::vector<FeatureMatrix> features) const {
    PreparedDialog p;
    p.tokens = tokenize(render_dialog(dialog, config_.n_modality_tokens), config_.n_modality_tokens);
    if (features.size() != p.tokens.modality_slots.size()) {
        throw data_error("dialog " + std::to_string(dialog.id) + " has " + std::to_string(p.tokens.modality_slots.size()) +
                         " media objects but " + std::to_string(features.size()) + " feature matrices");
    }
    p.features = std::move(features);
    return p;
}

std::vector<Tensor<float>> MultimodalModel::project_all(const PreparedDialog& prepared) const {
    std::vector<Tensor<float>> blocks;
    for (const auto& slot : prepared.tokens.modality_slots)
        blocks.push_back(projector(slot.kind).project(prepared.features.at(slot.object_index)));
    return blocks;
}

AssembledInput<float> MultimodalModel::assemble(const PreparedDialog& prepared) const {
    const auto blocks = project_all(prepared);
    return assemble_inputs<float>(prepared.tokens, blocks, lm_.embedding(), config_.loss_scope);
}

Tensor<float> MultimodalModel::loss(const PreparedDialog& prepared) const { return lm_.loss(assemble(prepared)); }

std::string MultimodalModel::generate(const PreparedDialog& context, std::size_t max_new_tokens) const {
    NoGradGuard no_grad;
    TokenStream stream = context.tokens;
    stream.ids.push_back(Vocabulary::id(Special::rs));
    stream.ids.push_back(Vocabulary::id(Special::bot));
    const auto blocks = project_all(context);
    const TokenId stop = Vocabulary::id(Special::rs_end);
    std::vector<TokenId> produced;
    for (std::size_t step = 0; step < max_new_tokens && stream.ids.size() < config_.lm.max_seq_len; ++step) {
        const auto input = assemble_inputs<float>(stream, blocks, lm_.embedding(), config_.loss_scope);
        const auto logits = lm_.forward(input.embeddings);
        const std::size_t vocab = logits.dim(1);
        const float* last = logits.data().data() + (logits.dim(0) - 1) * vocab;
        const auto next = static_cast<TokenId>(std::max_element(last, last + vocab) - last);
        if (next == stop) break;
        produced.push_back(next);
        stream.ids.push_back(next);
    }
    return decode_bytes(produced);
}

std::vector<double> MultimodalModel::answer_log_probs(const PreparedDialog& prepared) const {
    NoGradGuard no_grad;
    const auto& ids = prepared.tokens.ids;
    const TokenId rs = Vocabulary::id(Special::rs), bot = Vocabulary::id(Special::bot);
    std::size_t start = ids.size();
    for (std::size_t t = 0; t + 1 < ids.size(); ++t)
        if (ids[t] == rs && ids[t + 1] == bot) start = t + 2;
    if (start >= ids.size()) throw data_error("answer_log_probs: dialog has no bot message");
    std::size_t end = start;
    while (end < ids.size() && ids[end] != Vocabulary::id(Special::rs_end)) ++end;
    if (end == start) throw data_error("answer_log_probs: final bot message is empty");

    const auto input = assemble(prepared);
    const auto logits = lm_.forward(input.embeddings);
    const std::size_t vocab = logits.dim(1);
    std::vector<double> out;
    for (std::size_t t = start; t < end; ++t) {
        if (Vocabulary::is_special(ids[t])) continue;
        const float* row = logits.data().data() + (t - 1) * vocab;
        double mx = row[0];
        for (std::size_t j = 1; j < vocab; ++j) mx = std::max(mx, static_cast<double>(row[j]));
        double z = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) z += std::exp(row[j] - mx);
        out.push_back(std::min(0.0, row[ids[t]] - mx - std::log(z)));
    }
    return out;
}

std::vector<NamedTensor<float>> MultimodalModel::named_tensors() const {
    std::vector<NamedTensor<float>> out;
    out.push_back({"enc.image.proj",
                   Tensor<float>({kRawFeatureCount, image_encoder_.d_enc()}, image_encoder_.projection())});
    out.push_back({"enc.audio.proj",
                   Tensor<float>({kRawFeatureCount, audio_encoder_.d_enc()}, audio_encoder_.projection())});
    for (auto& t : image_projector_.named_parameters("proj.image")) out.push_back(std::move(t));
    for (auto& t : audio_projector_.named_parameters("proj.audio")) out.push_back(std::move(t));
    for (auto& t : lm_.named_parameters()) out.push_back(std::move(t));
    return out;
}

void MultimodalModel::load_tensors(const std::vector<NamedTensor<float>>& tensors) {
    std::map<std::string, const Tensor<float>*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t.tensor;
    auto fetch = [&](const std::string& name, const Shape& shape) -> const Tensor<float>& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw data_error("checkpoint lacks tensor '" + name + "'");
        if (it->second->shape() != shape) {
            throw data_error("tensor '" + name + "' has shape " + shape_string(it->second->shape()) + ", model expects " +
                             shape_string(shape));
        }
        return *it->second;
    };
    const auto& img = fetch("enc.image.proj", {kRawFeatureCount, config_.d_enc});
    image_encoder_ = ImageEncoder(config_.image_grid, std::vector<float>(img.data().begin(), img.data().end()));
    const auto& aud = fetch("enc.audio.proj", {kRawFeatureCount, config_.d_enc});
    audio_encoder_ = AudioEncoder(std::vector<float>(aud.data().begin(), aud.data().end()));
    for (auto& [name, tensor] : named_tensors()) {
        if (name.starts_with("enc.")) continue;
        const auto& src = fetch(name, tensor.shape());
        std::copy(src.data().begin(), src.data().end(), tensor.data().begin());
    }
}

void MultimodalModel::set_trainable(const TrainableGroups& lm_groups, bool projectors) {
    lm_.set_trainable(lm_groups);
    image_projector_.set_requires_grad(projectors);
    audio_projector_.set_requires_grad(projectors);
}

std::vector<NamedTensor<float>> MultimodalModel::trainable_parameters() const {
    std::vector<NamedTensor<float>> out;
    for (auto& t : named_tensors())
        if (t.tensor.requires_grad()) out.push_back(std::move(t));
    return out;
}

} // namespace s3kit
