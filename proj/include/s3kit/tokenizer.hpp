// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Byte-level tokenizer with eight structural tokens, and the dialog renderer.
//
// Rendered grammar (no separators between blocks):
//
//   dialog  := [system] message*
//   system  := "[RS]" text "[/RS]"
//   message := "[RS]" ("[user]" | "[bot]") body "[/RS]"
//   body    := text | "[M]" placeholder{n} "[/M]"
//
// Inside rendered text, '[' and '\' are written as "\[" and "\\" so message
// content can never be read back as a structural token.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "s3kit/chatfmt.hpp"

namespace s3kit {

using TokenId = std::int32_t;

enum class Special : TokenId {
    rs = 256,
    rs_end,
    user,
    bot,
    modality_open,
    modality_close,
    image,
    audio,
};

struct Vocabulary {
    static constexpr TokenId kByteCount = 256;
    static constexpr TokenId kSpecialCount = 8;
    static constexpr TokenId kSize = kByteCount + kSpecialCount;
    static constexpr std::array<std::string_view, kSpecialCount> kSurface{
        "[RS]", "[/RS]", "[user]", "[bot]", "[M]", "[/M]", "[img]", "[audio]"};

    static constexpr TokenId id(Special s) { return static_cast<TokenId>(s); }
    static constexpr bool is_special(TokenId id) { return id >= kByteCount && id < kSize; }
    static std::string_view surface(TokenId id) { return kSurface.at(static_cast<std::size_t>(id - kByteCount)); }
};

struct ModalitySlot {
    std::size_t start = 0; // index of the first placeholder
    std::size_t length = 0;
    MessageKind kind = MessageKind::image;
    std::size_t object_index = 0;

    bool operator==(const ModalitySlot&) const = default;
};

struct TokenStream {
    std::vector<TokenId> ids;
    std::vector<ModalitySlot> modality_slots;
};

inline constexpr std::size_t kDefaultModalityTokens = 4;

std::string escape_text(std::string_view text);
std::string unescape_text(std::string_view text);

std::string render_message(const Message& message, std::size_t n_modality_tokens = kDefaultModalityTokens);
std::string render_dialog(const Dialog& dialog, std::size_t n_modality_tokens = kDefaultModalityTokens);

/// Throws a data error on unbalanced [M]/[/M], placeholders outside a block,
/// mixed placeholder kinds, or a run length other than n_modality_tokens.
TokenStream tokenize(std::string_view text, std::size_t n_modality_tokens = kDefaultModalityTokens);

/// Inverse of tokenize on rendered text: bytes '[' and '\' come back escaped.
std::string detokenize(std::span<const TokenId> ids);

/// Raw message bytes: byte tokens verbatim, structural tokens dropped.
std::string decode_bytes(std::span<const TokenId> ids);

/// True at bot content tokens and the [/RS] that closes each bot message.
std::vector<std::uint8_t> bot_response_mask(std::span<const TokenId> ids);

} // namespace s3kit
