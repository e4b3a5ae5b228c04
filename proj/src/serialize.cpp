// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/serialize.hpp"

#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "s3kit/error.hpp"

namespace s3kit {

void write_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }

void write_bytes(std::ostream& out, const std::string& bytes) {
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw data_error(std::string("truncated while reading ") + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float read_f32(std::istream& in, const char* what) { return std::bit_cast<float>(read_u32(in, what)); }

std::string read_bytes(std::istream& in, std::size_t n, const char* what) {
    std::string s(n, '\0');
    if (n && !in.read(s.data(), static_cast<std::streamsize>(n)))
        throw data_error(std::string("truncated while reading ") + what);
    return s;
}

void write_named_tensors(std::ostream& out, const std::vector<NamedTensor<float>>& tensors) {
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        write_bytes(out, name);
        write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (auto d : tensor.shape()) write_u32(out, static_cast<std::uint32_t>(d));
        for (float v : tensor.data()) write_f32(out, v);
    }
}

std::vector<NamedTensor<float>> read_named_tensors(std::istream& in) {
    const std::uint32_t count = read_u32(in, "tensor count");
    std::vector<NamedTensor<float>> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in, "tensor name length");
        if (name_len > 4096) throw data_error("corrupt tensor block: name length " + std::to_string(name_len));
        std::string name = read_bytes(in, name_len, "tensor name");
        const std::uint32_t rank = read_u32(in, "tensor rank");
        if (rank > 8) throw data_error("corrupt tensor block: rank " + std::to_string(rank) + " for '" + name + "'");
        Shape shape;
        for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(read_u32(in, "tensor dims"));
        const std::size_t n = shape_size(shape);
        if (n > (std::size_t{1} << 31)) throw data_error("corrupt tensor block: '" + name + "' too large");
        std::vector<float> data(n);
        for (auto& v : data) v = read_f32(in, "tensor payload");
        tensors.push_back({std::move(name), Tensor<float>(std::move(shape), std::move(data))});
    }
    return tensors;
}

} // namespace s3kit
