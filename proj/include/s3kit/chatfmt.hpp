// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multimodal dialog records and the training-mixture builder.
//
// A dialog record is one JSON object per line:
//
//   {"id":0,"system_prompt":"...","messages":[
//       {"role":"user","type":"image","text":"img/bird.ppm"},
//       {"role":"bot","type":"text","text":"A cardinal."}]}
//
// Media messages carry a path or URI in "text"; resolution to bytes happens
// in the encoders. Unknown keys are ignored.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3kit/rng.hpp"

namespace s3kit {

enum class Role { user, bot };
enum class MessageKind { text, image, audio };

std::string_view to_string(Role role);
std::string_view to_string(MessageKind kind);

struct Message {
    Role role = Role::user;
    MessageKind kind = MessageKind::text;
    std::string content;

    bool operator==(const Message&) const = default;
};

struct Dialog {
    std::uint64_t id = 0;
    std::optional<std::string> system_prompt;
    std::vector<Message> messages;
    /// Dataset the dialog was drawn from, when known.
    std::optional<std::string> source;

    bool operator==(const Dialog&) const = default;
};

/// Throws ParseError on a violated Message/Dialog invariant.
void validate_dialog(const Dialog& dialog);

Dialog parse_dialog(std::string_view raw);
/// Single-line JSON record; parse_dialog(serialize_dialog(d)) == d.
std::string serialize_dialog(const Dialog& dialog);

/// Newline-delimited records. Blank lines are skipped; errors carry the line number.
std::vector<Dialog> read_dialogs(const std::filesystem::path& path);
std::vector<Dialog> parse_dialogs(std::string_view text);
std::string serialize_dialogs(std::span<const Dialog> dialogs);
void write_dialogs(const std::filesystem::path& path, std::span<const Dialog> dialogs);

enum class Task { image, audio, text };

struct MixtureEntry {
    std::string dataset_name;
    std::filesystem::path source_path;
    std::uint64_t sample_count = 0;
    std::string system_prompt;
    Task task = Task::text;
};

struct MixtureManifest {
    std::vector<MixtureEntry> entries;
};

/// Manifest file: {"datasets":[{"task":"image","dataset":"COCO","samples":5000,
/// "system_prompt":"...","source":"coco.jsonl"}, ...]}. Relative sources are
/// resolved against `base_dir`.
MixtureManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {});
MixtureManifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const MixtureManifest& manifest);
void validate_manifest(const MixtureManifest& manifest);

Dialog inject_system_prompt(Dialog dialog, const MixtureEntry& entry);

/// Question pools used when turning captioning records into dialogs.
struct QuestionTemplates {
    std::vector<std::string> image;
    std::vector<std::string> audio;

    static const QuestionTemplates& defaults();
};

/// Three messages: media, question, caption. The media message precedes the
/// question with probability 1/2.
Dialog synthesize_caption_dialog(std::string media_path, std::string caption, MessageKind kind, RngStream& rng,
                                 const QuestionTemplates& templates = QuestionTemplates::defaults());

/// Messages of all inputs in order; id and prompt come from the first dialog.
Dialog concat_dialogs(std::span<const Dialog> dialogs);

struct MixtureOptions {
    /// Share of short (<= 2 message) dialogs extended with 1-2 partner
    /// dialogs from the same dataset.
    double combine_fraction = 0.2;
    bool allow_replacement = false;
    std::size_t workers = 1;
};

/// Draws each dataset's sample_count records, injects its prompt, extends a
/// fraction of short dialogs, and shuffles the union. Ids are renumbered to
/// output positions. Output depends only on (manifest, seed, combine_fraction,
/// allow_replacement).
std::vector<Dialog> build_mixture(const MixtureManifest& manifest, std::uint64_t seed,
                                  const MixtureOptions& options = {});

} // namespace s3kit
