// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop, run configuration files and checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "s3kit/chatfmt.hpp"
#include "s3kit/model.hpp"
#include "s3kit/optim.hpp"

namespace s3kit {

struct TrainConfig {
    std::size_t batch_size = 128;
    std::size_t micro_batch = 8;
    double lr0 = 1e-4;
    double lr_min = 0.0;
    std::uint64_t total_steps = 0;
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 0; // log interval in steps, 0 = never
    std::size_t workers = 1;
    AdamWConfig adamw;
    TrainableGroups groups;
    bool train_projector = true;

    std::size_t accumulation_steps() const { return batch_size / micro_batch; }
    void validate() const;
};

/// Everything a key/value config file can set.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    std::string data;       // dialog JSONL path, relative to the config file
    std::string media_root; // defaults to the data file's directory
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys and bad
/// values raise ParseError naming the key.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);

struct Checkpoint {
    std::uint32_t version = 1;
    std::vector<std::string> vocabulary;
    ModelConfig model;
    TrainConfig train;
    std::uint64_t step = 0;
    std::uint64_t optimizer_steps = 0;
    std::uint64_t rng_seed = 0;
    std::vector<double> loss_history;
    std::vector<NamedTensor<float>> tensors;
    std::vector<NamedTensor<float>> first_moments;
    std::vector<NamedTensor<float>> second_moments;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);

/// Builds a model with the checkpoint's configuration and weights.
MultimodalModel restore_model(const Checkpoint& checkpoint);

/// Renders, tokenizes and encodes every dialog, `workers` at a time.
std::vector<PreparedDialog> prepare_all(const MultimodalModel& model, const std::vector<Dialog>& dialogs,
                                        const std::filesystem::path& media_root, std::size_t workers);

class Trainer {
public:
    Trainer(ModelConfig model_config, TrainConfig config, std::vector<PreparedDialog> data);
    Trainer(MultimodalModel model, TrainConfig config, std::vector<PreparedDialog> data);

    /// Continues from a checkpoint. `data` must be the same prepared mixture.
    static Trainer resume(const Checkpoint& checkpoint, std::vector<PreparedDialog> data);

    /// Dataset indices forming the batch of optimizer step `step`.
    std::vector<std::size_t> batch_indices(std::uint64_t step) const;

    /// One optimizer step at the scheduled learning rate. Returns the batch loss.
    double step();
    /// Same, with an explicit learning rate.
    double step_with_lr(double lr);
    /// Steps until total_steps is reached.
    void run();

    /// Token-weighted masked loss of a batch without updating anything.
    double evaluate(const std::vector<std::size_t>& indices) const;

    Checkpoint checkpoint() const;

    std::uint64_t current_step() const { return step_; }
    double scheduled_lr() const;
    const std::vector<double>& loss_history() const { return history_; }
    const TrainConfig& config() const { return config_; }
    const MultimodalModel& model() const { return model_; }
    MultimodalModel& model() { return model_; }
    const std::vector<PreparedDialog>& data() const { return data_; }

private:
    const std::vector<std::size_t>& epoch_order(std::uint64_t epoch) const;

    MultimodalModel model_;
    TrainConfig config_;
    std::vector<PreparedDialog> data_;
    std::vector<std::size_t> valid_targets_;
    AdamW<float> optimizer_;
    std::uint64_t step_ = 0;
    std::vector<double> history_;
    mutable std::optional<std::uint64_t> cached_epoch_;
    mutable std::vector<std::size_t> cached_order_;
};

} // namespace s3kit
