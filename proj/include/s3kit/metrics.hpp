// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: unigram METEOR, the hidden (inverse perplexity)
// metric, the modality-weighted integral metric and multiple-choice
// accuracy.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3kit/chatfmt.hpp"

namespace s3kit {

enum class DialogType { text = 0, text_image = 1, text_audio = 2, all_three = 3 };
inline constexpr std::size_t kDialogTypeCount = 4;

/// 0.1 / 0.2 / 0.3 / 0.4
double type_weight(DialogType type);
std::string_view to_string(DialogType type);
/// Accepts "text", "text+image", "text+audio", "text+image+audio".
DialogType parse_dialog_type(std::string_view name);
/// Type from the modalities a dialog actually contains.
DialogType classify_dialog(const Dialog& dialog);

/// exp(mean(log_probs)). Throws on an empty list or a positive entry.
double hidden_metric(std::span<const double> log_probs);

/// Porter (1980) suffix stripper, lowercase ASCII input.
std::string porter_stem(std::string_view word);

/// Lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> meteor_tokens(std::string_view text);

struct MeteorDetail {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fmean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

MeteorDetail meteor_detail(std::string_view hypothesis, std::string_view reference);
double meteor(std::string_view hypothesis, std::string_view reference);

struct DialogScore {
    DialogType type = DialogType::text;
    double meteor = 0.0;
    double hm = 0.0;
};

struct EvalReport {
    std::array<std::size_t, kDialogTypeCount> counts{};
    std::array<double, kDialogTypeCount> mean_combined{}; // mean of (meteor + hm) / 2
    std::array<double, kDialogTypeCount> mean_meteor{};
    std::array<double, kDialogTypeCount> mean_hm{};
    std::size_t types_present = 0;
    double integral = 0.0;
};

EvalReport integral_metric(std::span<const DialogScore> scores);

/// First A-J that stands alone or sits inside ( ) . : delimiters.
std::optional<char> extract_option_letter(std::string_view text);

struct MmmuPrediction {
    std::string generated;
    char gold = 'A';
    std::string discipline;
};

struct MmmuReport {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::map<std::string, double> per_discipline;
    /// Unweighted mean over disciplines.
    double discipline_mean = 0.0;
};

MmmuReport mmmu_accuracy(std::span<const MmmuPrediction> predictions);

struct PredictionRecord {
    std::uint64_t id = 0;
    DialogType type = DialogType::text;
    std::string hypothesis;
    std::string reference;
    std::vector<double> log_probs;
};

std::string serialize_prediction(const PredictionRecord& record);
PredictionRecord parse_prediction(std::string_view line);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records);

std::vector<DialogScore> score_predictions(std::span<const PredictionRecord> records);
std::string report_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

} // namespace s3kit
