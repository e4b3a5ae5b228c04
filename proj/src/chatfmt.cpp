// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/chatfmt.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "s3kit/error.hpp"
#include "s3kit/util.hpp"

namespace s3kit {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Role role) { return role == Role::user ? "user" : "bot"; }

std::string_view to_string(MessageKind kind) {
    switch (kind) {
    case MessageKind::text: return "text";
    case MessageKind::image: return "image";
    case MessageKind::audio: return "audio";
    }
    return "text";
}

namespace {

std::string_view to_string(Task task) {
    switch (task) {
    case Task::image: return "image";
    case Task::audio: return "audio";
    case Task::text: return "text";
    }
    return "text";
}

Task parse_task(const std::string& s) {
    if (s == "image") return Task::image;
    if (s == "audio") return Task::audio;
    if (s == "text") return Task::text;
    throw ParseError("task", "unknown task '" + s + "'");
}

const json& require(const json& obj, const char* key, const std::string& field) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(field, "missing");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& field) {
    const json& v = require(obj, key, field);
    if (!v.is_string()) throw ParseError(field, "expected a string");
    return v.get<std::string>();
}

Message parse_message(const json& obj, std::size_t index) {
    const std::string where = "messages[" + std::to_string(index) + "]";
    if (!obj.is_object()) throw ParseError(where, "expected an object");
    Message m;
    const std::string role = require_string(obj, "role", "role");
    if (role == "user") {
        m.role = Role::user;
    } else if (role == "bot") {
        m.role = Role::bot;
    } else {
        throw ParseError("role", "unknown role '" + role + "' in " + where);
    }
    const std::string type = require_string(obj, "type", "type");
    if (type == "text") {
        m.kind = MessageKind::text;
    } else if (type == "image") {
        m.kind = MessageKind::image;
    } else if (type == "audio") {
        m.kind = MessageKind::audio;
    } else {
        throw ParseError("type", "unknown type '" + type + "' in " + where);
    }
    m.content = require_string(obj, "text", "text");
    return m;
}

ordered_json to_json(const Dialog& d) {
    ordered_json obj;
    obj["id"] = d.id;
    if (d.system_prompt) obj["system_prompt"] = *d.system_prompt;
    if (d.source) obj["source"] = *d.source;
    ordered_json msgs = ordered_json::array();
    for (const auto& m : d.messages) {
        ordered_json mj;
        mj["role"] = to_string(m.role);
        mj["type"] = to_string(m.kind);
        mj["text"] = m.content;
        msgs.push_back(std::move(mj));
    }
    obj["messages"] = std::move(msgs);
    return obj;
}

} // namespace

void validate_dialog(const Dialog& dialog) {
    if (dialog.messages.empty()) throw ParseError("messages", "dialog has no messages");
    for (const auto& m : dialog.messages) {
        if (m.kind != MessageKind::text && m.content.empty()) {
            throw ParseError("text", "media message without a resource reference");
        }
        if (m.role == Role::bot && m.kind != MessageKind::text) {
            throw ParseError("type", "bot messages must be text");
        }
    }
}

Dialog parse_dialog(std::string_view raw) {
    json obj;
    try {
        obj = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ParseError("record", std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError("record", "expected a JSON object");

    Dialog d;
    const json& id = require(obj, "id", "id");
    if (!id.is_number_unsigned()) throw ParseError("id", "expected a non-negative integer");
    d.id = id.get<std::uint64_t>();

    if (auto it = obj.find("system_prompt"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("system_prompt", "expected a string");
        d.system_prompt = it->get<std::string>();
    }
    if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("source", "expected a string");
        d.source = it->get<std::string>();
    }

    const json& msgs = require(obj, "messages", "messages");
    if (!msgs.is_array()) throw ParseError("messages", "expected an array");
    for (std::size_t i = 0; i < msgs.size(); ++i) d.messages.push_back(parse_message(msgs[i], i));
    validate_dialog(d);
    return d;
}

std::string serialize_dialog(const Dialog& dialog) { return to_json(dialog).dump(); }

std::vector<Dialog> parse_dialogs(std::string_view text) {
    std::vector<Dialog> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
            try {
                out.push_back(parse_dialog(line));
            } catch (const ParseError& e) {
                throw ParseError(e.field(), "line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return out;
}

std::vector<Dialog> read_dialogs(const std::filesystem::path& path) { return parse_dialogs(read_file(path)); }

std::string serialize_dialogs(std::span<const Dialog> dialogs) {
    std::string out;
    for (const auto& d : dialogs) {
        out += serialize_dialog(d);
        out += '\n';
    }
    return out;
}

void write_dialogs(const std::filesystem::path& path, std::span<const Dialog> dialogs) {
    write_file(path, serialize_dialogs(dialogs));
}

MixtureManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("manifest", std::string("malformed JSON: ") + e.what());
    }
    const json& rows = require(obj, "datasets", "datasets");
    if (!rows.is_array()) throw ParseError("datasets", "expected an array");
    MixtureManifest manifest;
    for (const auto& row : rows) {
        MixtureEntry e;
        e.dataset_name = require_string(row, "dataset", "dataset");
        e.task = parse_task(require_string(row, "task", "task"));
        e.system_prompt = require_string(row, "system_prompt", "system_prompt");
        const json& samples = require(row, "samples", "samples");
        if (!samples.is_number_integer()) throw ParseError("samples", "expected an integer");
        if (samples.get<std::int64_t>() < 0) throw ParseError("samples", "negative sample count");
        e.sample_count = samples.get<std::uint64_t>();
        std::filesystem::path src = require_string(row, "source", "source");
        e.source_path = src.is_absolute() || base_dir.empty() ? src : base_dir / src;
        manifest.entries.push_back(std::move(e));
    }
    validate_manifest(manifest);
    return manifest;
}

MixtureManifest load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_file(path), path.parent_path());
}

std::string serialize_manifest(const MixtureManifest& manifest) {
    ordered_json rows = ordered_json::array();
    for (const auto& e : manifest.entries) {
        ordered_json row;
        row["task"] = to_string(e.task);
        row["dataset"] = e.dataset_name;
        row["samples"] = e.sample_count;
        row["system_prompt"] = e.system_prompt;
        row["source"] = e.source_path.string();
        rows.push_back(std::move(row));
    }
    ordered_json obj;
    obj["datasets"] = std::move(rows);
    return obj.dump(2) + "\n";
}

void validate_manifest(const MixtureManifest& manifest) {
    if (manifest.entries.empty()) throw ParseError("datasets", "manifest lists no datasets");
    std::set<std::string> names;
    for (const auto& e : manifest.entries) {
        if (!names.insert(e.dataset_name).second) throw ParseError("dataset", "duplicate dataset '" + e.dataset_name + "'");
        if (e.sample_count < 1) throw ParseError("samples", "dataset '" + e.dataset_name + "' needs at least one sample");
        if (e.system_prompt.empty()) throw ParseError("system_prompt", "dataset '" + e.dataset_name + "' has no prompt");
    }
}

Dialog inject_system_prompt(Dialog dialog, const MixtureEntry& entry) {
    dialog.system_prompt = entry.system_prompt;
    return dialog;
}

const QuestionTemplates& QuestionTemplates::defaults() {
    static const QuestionTemplates templates{
        {"What do you see in this picture?", "Describe this image.", "What is shown in the image?",
         "What is in this picture?"},
        {"What could make this sound?", "Describe this sound.", "What do you hear in this recording?",
         "What is the source of this audio?"},
    };
    return templates;
}

Dialog synthesize_caption_dialog(std::string media_path, std::string caption, MessageKind kind, RngStream& rng,
                                 const QuestionTemplates& templates) {
    if (kind == MessageKind::text) throw usage_error("synthesize_caption_dialog: kind must be image or audio");
    if (caption.empty()) throw ParseError("text", "empty caption");
    if (media_path.empty()) throw ParseError("text", "empty media reference");
    const auto& pool = kind == MessageKind::image ? templates.image : templates.audio;
    if (pool.empty()) throw usage_error("synthesize_caption_dialog: empty question pool");

    const bool media_first = rng.uniform() < 0.5;
    const std::string& question = pool[rng.below(pool.size())];
    Message media{Role::user, kind, std::move(media_path)};
    Message ask{Role::user, MessageKind::text, question};
    Dialog d;
    if (media_first) {
        d.messages = {std::move(media), std::move(ask)};
    } else {
        d.messages = {std::move(ask), std::move(media)};
    }
    d.messages.push_back({Role::bot, MessageKind::text, std::move(caption)});
    return d;
}

Dialog concat_dialogs(std::span<const Dialog> dialogs) {
    if (dialogs.empty()) throw usage_error("concat_dialogs: empty input");
    Dialog out = dialogs.front();
    for (std::size_t i = 1; i < dialogs.size(); ++i)
        out.messages.insert(out.messages.end(), dialogs[i].messages.begin(), dialogs[i].messages.end());
    return out;
}

std::vector<Dialog> build_mixture(const MixtureManifest& manifest, std::uint64_t seed, const MixtureOptions& options) {
    validate_manifest(manifest);
    const auto& entries = manifest.entries;

    std::vector<std::vector<Dialog>> sources(entries.size());
    parallel_for(entries.size(), options.workers, [&](std::size_t i) {
        try {
            sources[i] = read_dialogs(entries[i].source_path);
        } catch (const Error& e) {
            throw data_error("dataset '" + entries[i].dataset_name + "': " + e.what());
        }
    });

    std::vector<std::vector<Dialog>> drawn(entries.size());
    parallel_for(entries.size(), options.workers, [&](std::size_t i) {
        const auto& entry = entries[i];
        const auto& pool = sources[i];
        if (pool.empty()) throw data_error("dataset '" + entry.dataset_name + "' has no records");
        if (entry.sample_count > pool.size() && !options.allow_replacement) {
            throw data_error("dataset '" + entry.dataset_name + "' requests " + std::to_string(entry.sample_count) +
                             " samples but only " + std::to_string(pool.size()) + " records exist");
        }
        RngStream rng(seed, i + 1);
        std::vector<std::size_t> order(pool.size());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<std::size_t> picks(order.begin(), order.begin() + std::min<std::size_t>(order.size(), entry.sample_count));
        while (picks.size() < entry.sample_count) picks.push_back(rng.below(pool.size()));

        auto& out = drawn[i];
        out.reserve(picks.size());
        for (std::size_t k : picks) {
            Dialog d = inject_system_prompt(pool[k], entry);
            d.source = entry.dataset_name;
            out.push_back(std::move(d));
        }

        // Extension partners come from the drawn set as it was before extension.
        std::vector<std::size_t> short_ids;
        for (std::size_t k = 0; k < out.size(); ++k)
            if (out[k].messages.size() <= 2) short_ids.push_back(k);
        if (options.combine_fraction <= 0.0 || short_ids.size() < 2) return;
        const std::vector<Dialog> originals = out;
        for (std::size_t k : short_ids) {
            if (rng.uniform() >= options.combine_fraction) continue;
            const std::size_t parts = 2 + rng.below(2);
            std::vector<Dialog> group{originals[k]};
            while (group.size() < parts) {
                const std::size_t partner = short_ids[rng.below(short_ids.size())];
                if (partner != k) group.push_back(originals[partner]);
            }
            out[k] = concat_dialogs(group);
        }
    });

    std::vector<Dialog> mixture;
    for (auto& part : drawn)
        for (auto& d : part) mixture.push_back(std::move(d));
    RngStream order_rng(seed, 0);
    order_rng.shuffle(std::span<Dialog>(mixture));
    for (std::size_t i = 0; i < mixture.size(); ++i) mixture[i].id = i;
    return mixture;
}

} // namespace s3kit
