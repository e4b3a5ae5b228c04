// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/encoders.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "s3kit/error.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/serialize.hpp"
#include "s3kit/util.hpp"

namespace s3kit {

namespace {

constexpr char kFeatureMagic[4] = {'S', '3', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

std::uint16_t le16(const std::string& s, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) | (static_cast<unsigned char>(s[at + 1]) << 8));
}

std::uint32_t le32(const std::string& s, std::size_t at) {
    return static_cast<std::uint32_t>(le16(s, at)) | (static_cast<std::uint32_t>(le16(s, at + 2)) << 16);
}

void put16(std::string& s, std::uint16_t v) {
    s += static_cast<char>(v & 0xFF);
    s += static_cast<char>(v >> 8);
}

void put32(std::string& s, std::uint32_t v) {
    put16(s, static_cast<std::uint16_t>(v & 0xFFFF));
    put16(s, static_cast<std::uint16_t>(v >> 16));
}

} // namespace

void validate_features(const FeatureMatrix& f) {
    if (f.rows == 0 || f.cols == 0) throw numeric_error("feature matrix has a zero dimension");
    if (f.data.size() != f.rows * f.cols) throw numeric_error("feature matrix data does not match its shape");
    for (float v : f.data)
        if (!std::isfinite(v)) throw numeric_error("feature matrix holds a non-finite entry");
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read feature file '" + path.string() + "'");
    char magic[4];
    if (!in.read(magic, 4)) throw data_error("feature file '" + path.string() + "' is truncated");
    if (std::memcmp(magic, kFeatureMagic, 4) != 0) throw data_error("feature file '" + path.string() + "' has bad magic");
    const std::uint32_t version = read_u32(in, "feature version");
    if (version != kFeatureVersion) throw data_error("unsupported feature file version " + std::to_string(version));
    FeatureMatrix f;
    f.rows = read_u32(in, "feature rows");
    f.cols = read_u32(in, "feature cols");
    if (f.rows == 0 || f.cols == 0) throw data_error("feature file declares an empty matrix");
    f.data.resize(f.rows * f.cols);
    for (auto& v : f.data) v = read_f32(in, "feature payload");
    validate_features(f);
    return f;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& f) {
    validate_features(f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write feature file '" + path.string() + "'");
    out.write(kFeatureMagic, 4);
    write_u32(out, kFeatureVersion);
    write_u32(out, static_cast<std::uint32_t>(f.rows));
    write_u32(out, static_cast<std::uint32_t>(f.cols));
    for (float v : f.data) write_f32(out, v);
    if (!out) throw data_error("write failed for '" + path.string() + "'");
}

Image read_ppm(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    if (token() != "P6") throw data_error("'" + path.string() + "' is not a binary PPM (P6)");
    Image img;
    std::size_t maxval = 0;
    try {
        img.width = std::stoul(token());
        img.height = std::stoul(token());
        maxval = std::stoul(token());
    } catch (const std::exception&) {
        throw data_error("'" + path.string() + "' has a malformed PPM header");
    }
    if (maxval == 0 || maxval > 255) throw data_error("'" + path.string() + "' uses unsupported PPM maxval");
    ++pos; // single whitespace byte after maxval
    const std::size_t n = img.width * img.height * 3;
    if (img.width == 0 || img.height == 0 || bytes.size() < pos + n) {
        throw data_error("'" + path.string() + "' has a truncated PPM payload");
    }
    img.rgb.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<unsigned char>(bytes[pos + i]);
        img.rgb[i] = static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
    write_file(path, out);
}

PcmAudio read_wav(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
        throw data_error("'" + path.string() + "' is not a RIFF/WAVE file");
    }
    PcmAudio audio;
    bool have_fmt = false, have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::string id = bytes.substr(pos, 4);
        const std::size_t size = le32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw data_error("'" + path.string() + "' has a truncated chunk");
        if (id == "fmt ") {
            if (size < 16) throw data_error("'" + path.string() + "' has a short fmt chunk");
            const std::uint16_t format = le16(bytes, body);
            audio.channels = le16(bytes, body + 2);
            audio.sample_rate = le32(bytes, body + 4);
            const std::uint16_t bits = le16(bytes, body + 14);
            if (format != 1 || bits != 16) throw data_error("'" + path.string() + "' is not 16-bit PCM");
            have_fmt = true;
        } else if (id == "data") {
            audio.samples.resize(size / 2);
            for (std::size_t i = 0; i < audio.samples.size(); ++i)
                audio.samples[i] = static_cast<std::int16_t>(le16(bytes, body + 2 * i));
            have_data = true;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt || !have_data) throw data_error("'" + path.string() + "' lacks fmt or data chunk");
    return audio;
}

void write_wav(const std::filesystem::path& path, const PcmAudio& audio) {
    const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
    std::string out = "RIFF";
    put32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put32(out, 16);
    put16(out, 1);
    put16(out, audio.channels);
    put32(out, audio.sample_rate);
    put32(out, audio.sample_rate * audio.channels * 2);
    put16(out, static_cast<std::uint16_t>(audio.channels * 2));
    put16(out, 16);
    out += "data";
    put32(out, data_bytes);
    for (auto s : audio.samples) put16(out, static_cast<std::uint16_t>(s));
    write_file(path, out);
}

std::vector<float> make_projection(std::size_t d_enc, std::uint64_t seed) {
    if (d_enc == 0) throw usage_error("encoder dimension must be positive");
    RngStream rng(seed, 0x656E63);
    std::vector<float> m(kRawFeatureCount * d_enc);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kRawFeatureCount));
    for (auto& v : m) v = static_cast<float>(rng.normal() * scale);
    return m;
}

FeatureMatrix project_raw(std::span<const RawFeatures> raw, std::span<const float> projection, std::size_t d_enc) {
    FeatureMatrix f{raw.size(), d_enc, std::vector<float>(raw.size() * d_enc)};
    for (std::size_t r = 0; r < raw.size(); ++r) {
        for (std::size_t j = 0; j < d_enc; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < kRawFeatureCount; ++k) s += raw[r][k] * projection[k * d_enc + j];
            f.data[r * d_enc + j] = static_cast<float>(s);
        }
    }
    validate_features(f);
    return f;
}

ImageEncoder::ImageEncoder(std::size_t d_enc, std::size_t grid, std::uint64_t seed)
    : ImageEncoder(grid, make_projection(d_enc, seed)) {}

ImageEncoder::ImageEncoder(std::size_t grid, std::vector<float> projection)
    : d_enc_(projection.size() / kRawFeatureCount), grid_(grid), projection_(std::move(projection)) {
    if (grid_ == 0) throw usage_error("image grid must be positive");
    if (d_enc_ == 0 || projection_.size() != kRawFeatureCount * d_enc_) throw usage_error("bad image projection shape");
}

std::vector<RawFeatures> ImageEncoder::raw_features(const Image& image) const {
    if (image.width < grid_ || image.height < grid_) {
        throw data_error("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                         " is smaller than the " + std::to_string(grid_) + "x" + std::to_string(grid_) + " patch grid");
    }
    if (image.rgb.size() != image.width * image.height * 3) throw data_error("image buffer does not match its size");
    std::vector<RawFeatures> out;
    const double w = static_cast<double>(image.width), h = static_cast<double>(image.height);
    for (std::size_t gy = 0; gy < grid_; ++gy) {
        const std::size_t y0 = gy * image.height / grid_, y1 = (gy + 1) * image.height / grid_;
        for (std::size_t gx = 0; gx < grid_; ++gx) {
            const std::size_t x0 = gx * image.width / grid_, x1 = (gx + 1) * image.width / grid_;
            double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
            for (std::size_t y = y0; y < y1; ++y) {
                for (std::size_t x = x0; x < x1; ++x) {
                    for (std::size_t c = 0; c < 3; ++c) {
                        const double v = image.rgb[(y * image.width + x) * 3 + c] / 255.0;
                        sum[c] += v;
                        sq[c] += v * v;
                    }
                }
            }
            const double n = static_cast<double>((y1 - y0) * (x1 - x0));
            RawFeatures f{};
            for (std::size_t c = 0; c < 3; ++c) {
                const double mean = sum[c] / n;
                f[c] = mean;
                f[3 + c] = std::sqrt(std::max(0.0, sq[c] / n - mean * mean));
            }
            f[6] = (static_cast<double>(x0 + x1) / 2.0) / w;
            f[7] = (static_cast<double>(y0 + y1) / 2.0) / h;
            out.push_back(f);
        }
    }
    return out;
}

FeatureMatrix ImageEncoder::encode(const Image& image) const {
    return project_raw(raw_features(image), projection_, d_enc_);
}

AudioEncoder::AudioEncoder(std::size_t d_enc, std::uint64_t seed) : AudioEncoder(make_projection(d_enc, seed)) {}

AudioEncoder::AudioEncoder(std::vector<float> projection)
    : d_enc_(projection.size() / kRawFeatureCount), projection_(std::move(projection)) {
    if (d_enc_ == 0 || projection_.size() != kRawFeatureCount * d_enc_) throw usage_error("bad audio projection shape");
}

std::array<double, kRawFeatureCount + 1> AudioEncoder::band_edges(std::uint32_t sample_rate) {
    std::array<double, kRawFeatureCount + 1> edges{};
    const double lo = sample_rate / 256.0, hi = sample_rate / 2.0;
    for (std::size_t b = 0; b <= kRawFeatureCount; ++b)
        edges[b] = lo * std::pow(hi / lo, static_cast<double>(b) / kRawFeatureCount);
    return edges;
}

std::vector<RawFeatures> AudioEncoder::raw_features(const PcmAudio& audio) const {
    if (audio.channels != 1) throw data_error("audio must be mono, got " + std::to_string(audio.channels) + " channels");
    if (audio.sample_rate == 0) throw data_error("audio sample rate is zero");
    if (audio.samples.size() < kFrame) {
        throw data_error("audio holds " + std::to_string(audio.samples.size()) + " samples, need at least " +
                         std::to_string(kFrame));
    }
    const auto edges = band_edges(audio.sample_rate);
    const double bin_hz = static_cast<double>(audio.sample_rate) / kFrame;

    // bins[b] = DFT bins whose center frequency lies in [edges[b], edges[b+1]).
    std::array<std::vector<std::size_t>, kRawFeatureCount> bins;
    for (std::size_t k = 1; k <= kFrame / 2; ++k) {
        const double f = k * bin_hz;
        for (std::size_t b = 0; b < kRawFeatureCount; ++b) {
            const bool last = b + 1 == kRawFeatureCount;
            if (f >= edges[b] && (f < edges[b + 1] || (last && f <= edges[b + 1]))) bins[b].push_back(k);
        }
    }

    std::vector<double> window(kFrame);
    for (std::size_t n = 0; n < kFrame; ++n)
        window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / kFrame);

    const std::size_t frames = 1 + (audio.samples.size() - kFrame) / kHop;
    std::vector<RawFeatures> out(frames);
    std::vector<double> x(kFrame);
    for (std::size_t fr = 0; fr < frames; ++fr) {
        for (std::size_t n = 0; n < kFrame; ++n) x[n] = window[n] * audio.samples[fr * kHop + n] / 32768.0;
        for (std::size_t b = 0; b < kRawFeatureCount; ++b) {
            double energy = 0.0;
            for (std::size_t k : bins[b]) {
                const double coeff = 2.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / kFrame);
                double s1 = 0.0, s2 = 0.0;
                for (std::size_t n = 0; n < kFrame; ++n) {
                    const double s0 = x[n] + coeff * s1 - s2;
                    s2 = s1;
                    s1 = s0;
                }
                energy += (s1 * s1 + s2 * s2 - coeff * s1 * s2) / (static_cast<double>(kFrame) * kFrame);
            }
            out[fr][b] = std::log(std::max(0.0, energy) + kLogFloor);
        }
    }
    return out;
}

FeatureMatrix AudioEncoder::encode(const PcmAudio& audio) const {
    return project_raw(raw_features(audio), projection_, d_enc_);
}

} // namespace s3kit
