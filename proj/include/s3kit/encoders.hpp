// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen toy modality encoders and the S3FT feature-file format.
//
// Both encoders compute an 8-value descriptor per patch (image) or frame
// (audio) and map it to d_enc with a fixed seeded random projection. They are
// pure functions of their input bytes.
//
// S3FT layout (little-endian):
//   "S3FT"  u32 version=1  u32 rows  u32 cols  rows*cols x f32 (row-major)

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace s3kit {

struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    std::span<const float> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    bool operator==(const FeatureMatrix&) const = default;
};

/// Throws a numeric error on zero dimensions, size mismatch or non-finite entries.
void validate_features(const FeatureMatrix& f);

FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FeatureMatrix& f);

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb; // width*height*3, row-major
};

/// Binary PPM (P6) with maxval <= 255.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

struct PcmAudio {
    std::uint32_t sample_rate = 16000;
    std::uint16_t channels = 1;
    std::vector<std::int16_t> samples; // interleaved when channels > 1
};

/// RIFF/WAVE with 16-bit PCM.
PcmAudio read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const PcmAudio& audio);

inline constexpr std::size_t kRawFeatureCount = 8;
using RawFeatures = std::array<double, kRawFeatureCount>;

/// 8 x d_enc matrix with N(0, 1/8) entries drawn from `seed`.
std::vector<float> make_projection(std::size_t d_enc, std::uint64_t seed);

class ImageEncoder {
public:
    ImageEncoder(std::size_t d_enc, std::size_t grid, std::uint64_t seed);
    ImageEncoder(std::size_t grid, std::vector<float> projection);

    /// Per patch: mean RGB, std RGB (channels in [0,1]), patch center (x, y) in [0,1].
    std::vector<RawFeatures> raw_features(const Image& image) const;
    FeatureMatrix encode(const Image& image) const;

    std::size_t d_enc() const { return d_enc_; }
    std::size_t grid() const { return grid_; }
    const std::vector<float>& projection() const { return projection_; }

private:
    std::size_t d_enc_;
    std::size_t grid_;
    std::vector<float> projection_;
};

class AudioEncoder {
public:
    static constexpr std::size_t kFrame = 1024;
    static constexpr std::size_t kHop = 512;
    static constexpr double kLogFloor = 1e-10;

    AudioEncoder(std::size_t d_enc, std::uint64_t seed);
    explicit AudioEncoder(std::vector<float> projection);

    /// Band edges in Hz: 8 geometric bands from sample_rate/256 to sample_rate/2.
    static std::array<double, kRawFeatureCount + 1> band_edges(std::uint32_t sample_rate);

    /// Per frame: log(energy + 1e-10) in each band, from Goertzel power at every
    /// DFT bin whose frequency falls in the band, Hann-windowed.
    std::vector<RawFeatures> raw_features(const PcmAudio& audio) const;
    FeatureMatrix encode(const PcmAudio& audio) const;

    std::size_t d_enc() const { return d_enc_; }
    const std::vector<float>& projection() const { return projection_; }

private:
    std::size_t d_enc_;
    std::vector<float> projection_;
};

/// raw (rows x 8) times projection (8 x d_enc).
FeatureMatrix project_raw(std::span<const RawFeatures> raw, std::span<const float> projection, std::size_t d_enc);

} // namespace s3kit
