// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic corpora for tests and the acceptance suite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s3kit/chatfmt.hpp"
#include "s3kit/model.hpp"
#include "s3kit/trainer.hpp"

namespace s3kit::fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// The apple dialog: image, "What is it?", "A red apple with red worm".
Dialog apple_dialog();

/// Writes media under dir/media and dialogs to dir/dialogs.jsonl. The 32
/// dialogs mix image, audio, image+audio and text-only records and every bot
/// answer is unique.
std::vector<Dialog> write_overfit_corpus(const std::filesystem::path& dir);

/// Model and training settings used for the memorization run.
ModelConfig overfit_model_config();
TrainConfig overfit_train_config();

struct TableRow {
    Task task;
    std::string dataset;
    std::uint64_t samples;
    std::string system_prompt;
};

/// The sixteen rows of the published training mixture.
const std::vector<TableRow>& mixture_table();

/// Writes one synthetic source file per row holding ceil(samples * scale)
/// records, plus manifest.json requesting that many samples. Returns the
/// manifest path.
std::filesystem::path write_table_manifest(const std::filesystem::path& dir, double scale);

/// Random image with the given size.
Image random_image(std::size_t width, std::size_t height, std::uint64_t seed);
/// Sum of sines at `freqs`, 16-bit mono.
PcmAudio tone(std::uint32_t sample_rate, std::size_t samples, const std::vector<double>& freqs, double amplitude);

} // namespace s3kit::fixture
