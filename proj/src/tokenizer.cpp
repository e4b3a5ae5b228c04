// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/tokenizer.hpp"

#include "s3kit/error.hpp"

namespace s3kit {

namespace {

std::string_view surface(Special s) { return Vocabulary::surface(Vocabulary::id(s)); }

} // namespace

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '[' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string unescape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\\' && i + 1 < text.size() && (text[i + 1] == '[' || text[i + 1] == '\\')) ++i;
        out += text[i];
    }
    return out;
}

std::string render_message(const Message& message, std::size_t n_modality_tokens) {
    std::string out(surface(Special::rs));
    out += surface(message.role == Role::user ? Special::user : Special::bot);
    if (message.kind == MessageKind::text) {
        out += escape_text(message.content);
    } else {
        out += surface(Special::modality_open);
        const auto placeholder = surface(message.kind == MessageKind::image ? Special::image : Special::audio);
        for (std::size_t i = 0; i < n_modality_tokens; ++i) out += placeholder;
        out += surface(Special::modality_close);
    }
    out += surface(Special::rs_end);
    return out;
}

std::string render_dialog(const Dialog& dialog, std::size_t n_modality_tokens) {
    std::string out;
    if (dialog.system_prompt && !dialog.system_prompt->empty()) {
        out += surface(Special::rs);
        out += escape_text(*dialog.system_prompt);
        out += surface(Special::rs_end);
    }
    for (const auto& m : dialog.messages) out += render_message(m, n_modality_tokens);
    return out;
}

TokenStream tokenize(std::string_view text, std::size_t n_modality_tokens) {
    TokenStream ts;
    bool in_block = false;
    std::size_t run_start = 0, run_length = 0;
    MessageKind run_kind = MessageKind::image;

    std::size_t i = 0;
    auto byte_token = [&](char c) {
        if (in_block) throw data_error("tokenize: text inside a modality block at byte " + std::to_string(i));
        ts.ids.push_back(static_cast<TokenId>(static_cast<unsigned char>(c)));
    };

    while (i < text.size()) {
        const char c = text[i];
        if (c == '\\' && i + 1 < text.size() && (text[i + 1] == '[' || text[i + 1] == '\\')) {
            byte_token(text[i + 1]);
            i += 2;
            continue;
        }
        TokenId special = -1;
        std::size_t match_len = 0;
        if (c == '[') {
            for (TokenId k = 0; k < Vocabulary::kSpecialCount; ++k) {
                const auto form = Vocabulary::kSurface[static_cast<std::size_t>(k)];
                if (form.size() > match_len && text.substr(i, form.size()) == form) {
                    special = Vocabulary::kByteCount + k;
                    match_len = form.size();
                }
            }
        }
        if (special < 0) {
            byte_token(c);
            ++i;
            continue;
        }

        const std::size_t pos = ts.ids.size();
        const auto s = static_cast<Special>(special);
        if (s == Special::modality_open) {
            if (in_block) throw data_error("tokenize: nested [M] at token " + std::to_string(pos));
            in_block = true;
            run_length = 0;
            run_start = pos + 1;
        } else if (s == Special::modality_close) {
            if (!in_block) throw data_error("tokenize: [/M] without matching [M] at token " + std::to_string(pos));
            if (run_length != n_modality_tokens) {
                throw data_error("tokenize: modality block holds " + std::to_string(run_length) +
                                 " placeholders, expected " + std::to_string(n_modality_tokens));
            }
            ts.modality_slots.push_back({run_start, run_length, run_kind, ts.modality_slots.size()});
            in_block = false;
        } else if (s == Special::image || s == Special::audio) {
            if (!in_block) throw data_error("tokenize: placeholder outside a modality block at token " + std::to_string(pos));
            const MessageKind kind = s == Special::image ? MessageKind::image : MessageKind::audio;
            if (run_length > 0 && kind != run_kind) throw data_error("tokenize: mixed placeholder kinds in one block");
            run_kind = kind;
            ++run_length;
        } else if (in_block) {
            throw data_error("tokenize: unexpected " + std::string(Vocabulary::surface(special)) +
                             " inside a modality block");
        }
        ts.ids.push_back(special);
        i += match_len;
    }
    if (in_block) throw data_error("tokenize: [M] without matching [/M]");
    return ts;
}

std::string detokenize(std::span<const TokenId> ids) {
    std::string out;
    for (TokenId id : ids) {
        if (id < 0 || id >= Vocabulary::kSize) throw data_error("detokenize: id " + std::to_string(id) + " out of range");
        if (Vocabulary::is_special(id)) {
            out += Vocabulary::surface(id);
            continue;
        }
        const char c = static_cast<char>(id);
        if (c == '[' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

std::string decode_bytes(std::span<const TokenId> ids) {
    std::string out;
    for (TokenId id : ids) {
        if (id < 0 || id >= Vocabulary::kSize) throw data_error("decode: id " + std::to_string(id) + " out of range");
        if (!Vocabulary::is_special(id)) out += static_cast<char>(id);
    }
    return out;
}

std::vector<std::uint8_t> bot_response_mask(std::span<const TokenId> ids) {
    std::vector<std::uint8_t> mask(ids.size(), 0);
    const TokenId rs = Vocabulary::id(Special::rs);
    const TokenId rs_end = Vocabulary::id(Special::rs_end);
    const TokenId bot = Vocabulary::id(Special::bot);
    bool in_bot = false;
    for (std::size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] == rs) {
            in_bot = t + 1 < ids.size() && ids[t + 1] == bot;
            if (in_bot) ++t; // the role token itself is context, not target
            continue;
        }
        if (in_bot) {
            mask[t] = 1;
            if (ids[t] == rs_end) in_bot = false;
        }
    }
    return mask;
}

} // namespace s3kit
