// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary helpers and the named-tensor block shared by
// checkpoints:
//
//   u32 count
//   count x { u32 name_len, name bytes, u32 rank, rank x u32 dim,
//             product(dims) x f32 }

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "s3kit/optim.hpp"

namespace s3kit {

void write_u32(std::ostream& out, std::uint32_t v);
void write_f32(std::ostream& out, float v);
void write_bytes(std::ostream& out, const std::string& bytes);

/// Each reader throws a data error naming `what` when the stream ends early.
std::uint32_t read_u32(std::istream& in, const char* what);
float read_f32(std::istream& in, const char* what);
std::string read_bytes(std::istream& in, std::size_t n, const char* what);

void write_named_tensors(std::ostream& out, const std::vector<NamedTensor<float>>& tensors);
std::vector<NamedTensor<float>> read_named_tensors(std::istream& in);

} // namespace s3kit
