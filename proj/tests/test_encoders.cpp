// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numbers>

#include "fixture.hpp"
#include "s3kit/encoders.hpp"
#include "s3kit/error.hpp"
#include "s3kit/util.hpp"

using namespace s3kit;

namespace {

Image solid(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img{w, h, {}};
    for (std::size_t i = 0; i < w * h; ++i) img.rgb.insert(img.rgb.end(), {r, g, b});
    return img;
}

// Direct DFT power of one frame, summed over the bins of each band.
std::array<double, kRawFeatureCount> dft_band_log_energy(const PcmAudio& a, std::size_t frame) {
    const std::size_t n_fft = AudioEncoder::kFrame;
    const auto edges = AudioEncoder::band_edges(a.sample_rate);
    std::array<double, kRawFeatureCount> e{};
    for (std::size_t k = 1; k <= n_fft / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t n = 0; n < n_fft; ++n) {
            const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft);
            const double x = w * a.samples[frame * AudioEncoder::kHop + n] / 32768.0;
            acc += x * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * n) / n_fft);
        }
        const double f = static_cast<double>(k) * a.sample_rate / n_fft;
        for (std::size_t b = 0; b < kRawFeatureCount; ++b) {
            const bool last = b + 1 == kRawFeatureCount;
            if (f >= edges[b] && (f < edges[b + 1] || (last && f <= edges[b + 1])))
                e[b] += std::norm(acc) / (static_cast<double>(n_fft) * n_fft);
        }
    }
    for (auto& v : e) v = std::log(v + AudioEncoder::kLogFloor);
    return e;
}

} // namespace

TEST(FeatureFile, RoundTripBitExact) {
    fixture::TempDir dir("feat");
    FeatureMatrix f{2, 3, {1.5f, -2.25f, 3.0f, 1e-30f, 4e30f, -0.0f}};
    save_features(dir.path() / "a.s3ft", f);
    const auto g = load_features(dir.path() / "a.s3ft");
    EXPECT_EQ(g.rows, 2u);
    EXPECT_EQ(g.cols, 3u);
    ASSERT_EQ(g.data.size(), f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i)
        EXPECT_EQ(std::memcmp(&f.data[i], &g.data[i], sizeof(float)), 0);
}

TEST(FeatureFile, LayoutIsLittleEndian) {
    fixture::TempDir dir("feat");
    save_features(dir.path() / "a.s3ft", FeatureMatrix{1, 1, {1.0f}});
    const std::string bytes = read_file(dir.path() / "a.s3ft");
    ASSERT_EQ(bytes.size(), 4u + 12u + 4u);
    EXPECT_EQ(bytes.substr(0, 4), "S3FT");
    EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
    EXPECT_EQ(bytes.substr(16, 4), std::string("\x00\x00\x80\x3f", 4));
}

TEST(FeatureFile, Errors) {
    fixture::TempDir dir("feat");
    save_features(dir.path() / "ok.s3ft", FeatureMatrix{4, 4, std::vector<float>(16, 1.0f)});
    std::string bytes = read_file(dir.path() / "ok.s3ft");

    std::string bad = bytes;
    bad.replace(0, 4, "XXXX");
    write_file(dir.path() / "magic.s3ft", bad);
    EXPECT_THROW(load_features(dir.path() / "magic.s3ft"), Error);

    write_file(dir.path() / "short.s3ft", bytes.substr(0, bytes.size() - 4)); // 15 floats
    try {
        load_features(dir.path() / "short.s3ft");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }

    std::string nan = bytes;
    const float q = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan.data() + 16, &q, 4);
    write_file(dir.path() / "nan.s3ft", nan);
    EXPECT_THROW(load_features(dir.path() / "nan.s3ft"), Error);

    std::string version = bytes;
    version[4] = 2;
    write_file(dir.path() / "ver.s3ft", version);
    EXPECT_THROW(load_features(dir.path() / "ver.s3ft"), Error);

    EXPECT_THROW(load_features(dir.path() / "missing.s3ft"), Error);
    EXPECT_THROW(save_features(dir.path() / "x.s3ft", FeatureMatrix{0, 3, {}}), Error);
}

TEST(Ppm, RoundTripAndErrors) {
    fixture::TempDir dir("ppm");
    const Image img = fixture::random_image(7, 5, 3);
    write_ppm(dir.path() / "a.ppm", img);
    const Image back = read_ppm(dir.path() / "a.ppm");
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.rgb, img.rgb);

    write_file(dir.path() / "p3.ppm", "P3\n1 1\n255\n0 0 0\n");
    EXPECT_THROW(read_ppm(dir.path() / "p3.ppm"), Error);
    write_file(dir.path() / "short.ppm", std::string("P6\n2 2\n255\n") + std::string(5, '\0'));
    EXPECT_THROW(read_ppm(dir.path() / "short.ppm"), Error);
    write_file(dir.path() / "comment.ppm", std::string("P6\n# made by hand\n1 1\n255\n") + "abc");
    EXPECT_EQ(read_ppm(dir.path() / "comment.ppm").rgb, (std::vector<std::uint8_t>{'a', 'b', 'c'}));
}

TEST(Wav, RoundTripAndErrors) {
    fixture::TempDir dir("wav");
    const PcmAudio a = fixture::tone(16000, 2000, {440.0}, 0.5);
    write_wav(dir.path() / "a.wav", a);
    const PcmAudio b = read_wav(dir.path() / "a.wav");
    EXPECT_EQ(b.sample_rate, 16000u);
    EXPECT_EQ(b.channels, 1u);
    EXPECT_EQ(b.samples, a.samples);
    write_file(dir.path() / "junk.wav", "RIFX....WAVE");
    EXPECT_THROW(read_wav(dir.path() / "junk.wav"), Error);
}

TEST(ImageEncoder, BlackImage) {
    const ImageEncoder enc(64, 4, 1);
    const Image black = solid(16, 16, 0, 0, 0);
    const auto raw = enc.raw_features(black);
    ASSERT_EQ(raw.size(), 16u);
    for (std::size_t p = 0; p < 16; ++p) {
        for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(raw[p][c], 0.0);
        EXPECT_DOUBLE_EQ(raw[p][6], (static_cast<double>(p % 4) * 4 + 2) / 16.0);
        EXPECT_DOUBLE_EQ(raw[p][7], (static_cast<double>(p / 4) * 4 + 2) / 16.0);
    }
    const auto f = enc.encode(black);
    EXPECT_EQ(f.rows, 16u);
    EXPECT_EQ(f.cols, 64u);
    // Rows equal the projection of [0,...,0,cx,cy].
    const auto& w = enc.projection();
    for (std::size_t p = 0; p < 16; ++p)
        for (std::size_t j = 0; j < 64; ++j)
            EXPECT_NEAR(f.row(p)[j], raw[p][6] * w[6 * 64 + j] + raw[p][7] * w[7 * 64 + j], 1e-6);
    EXPECT_NE(f.row(0)[0], f.row(5)[0]);
}

TEST(ImageEncoder, WhiteImage) {
    const ImageEncoder enc(64, 4, 1);
    for (const auto& r : enc.raw_features(solid(8, 12, 255, 255, 255))) {
        for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(r[c], 1.0);
        for (std::size_t c = 3; c < 6; ++c) EXPECT_NEAR(r[c], 0.0, 1e-7);
    }
}

TEST(ImageEncoder, QuadrantMeans) {
    // 2x2 image, grid 2: each pixel is its own patch.
    Image img{2, 2, {255, 0, 0, 0, 255, 0, 0, 0, 255, 51, 102, 153}};
    const ImageEncoder enc(8, 2, 4);
    const auto raw = enc.raw_features(img);
    ASSERT_EQ(raw.size(), 4u);
    const double expected[4][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.2, 0.4, 0.6}};
    for (std::size_t p = 0; p < 4; ++p) {
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_NEAR(raw[p][c], expected[p][c], 1e-12);
            EXPECT_NEAR(raw[p][3 + c], 0.0, 1e-7);
        }
    }
    EXPECT_DOUBLE_EQ(raw[3][6], 0.75);
    EXPECT_DOUBLE_EQ(raw[3][7], 0.75);
}

TEST(ImageEncoder, StdIsPopulation) {
    Image img{2, 1, {0, 0, 0, 255, 255, 255}};
    const ImageEncoder enc(8, 1, 4);
    const auto raw = enc.raw_features(img);
    EXPECT_NEAR(raw[0][0], 0.5, 1e-12);
    EXPECT_NEAR(raw[0][3], 0.5, 1e-12);
}

TEST(ImageEncoder, UndersizedAndDeterministic) {
    const ImageEncoder enc(16, 4, 9);
    EXPECT_THROW(enc.encode(solid(3, 8, 1, 2, 3)), Error);
    const Image img = fixture::random_image(20, 13, 77);
    EXPECT_EQ(enc.encode(img), enc.encode(img));
    EXPECT_EQ(ImageEncoder(16, 4, 9).encode(img), enc.encode(img));
    EXPECT_NE(ImageEncoder(16, 4, 10).encode(img), enc.encode(img));
}

TEST(Projection, ShapeAndScale) {
    const auto w = make_projection(256, 5);
    ASSERT_EQ(w.size(), 8u * 256u);
    double s = 0, s2 = 0;
    for (float v : w) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    const double mean = s / w.size(), var = s2 / w.size() - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(var, 1.0 / 8.0, 0.015);
    EXPECT_NE(make_projection(256, 5), make_projection(256, 6));
}

TEST(AudioEncoder, BandEdges) {
    const auto e = AudioEncoder::band_edges(16000);
    EXPECT_DOUBLE_EQ(e.front(), 62.5);
    EXPECT_DOUBLE_EQ(e.back(), 8000.0);
    for (std::size_t b = 1; b + 1 < e.size(); ++b) EXPECT_NEAR(e[b] / e[b - 1], e[b + 1] / e[b], 1e-9);
}

TEST(AudioEncoder, SilenceSitsAtTheFloor) {
    const AudioEncoder enc(64, 2);
    PcmAudio a;
    a.samples.assign(3000, 0);
    const auto raw = enc.raw_features(a);
    EXPECT_EQ(raw.size(), 1u + (3000 - 1024) / 512);
    for (const auto& r : raw)
        for (double v : r) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(AudioEncoder, FrameCount) {
    const AudioEncoder enc(64, 2);
    EXPECT_EQ(enc.encode(fixture::tone(16000, 1024, {300.0}, 0.5)).rows, 1u);
    EXPECT_EQ(enc.encode(fixture::tone(16000, 1536, {300.0}, 0.5)).rows, 2u);
    EXPECT_EQ(enc.encode(fixture::tone(16000, 1535, {300.0}, 0.5)).rows, 1u);
}

TEST(AudioEncoder, SineAtBandCenterDominates) {
    const AudioEncoder enc(64, 2);
    const auto e = AudioEncoder::band_edges(16000);
    const double center = std::sqrt(e[3] * e[4]);
    const auto raw = enc.raw_features(fixture::tone(16000, 4096, {center}, 0.7));
    for (const auto& r : raw) {
        for (std::size_t b = 0; b < kRawFeatureCount; ++b)
            if (b != 3) EXPECT_GT(r[3], r[b]) << "band " << b;
    }
}

TEST(AudioEncoder, GoertzelMatchesDirectDft) {
    const AudioEncoder enc(8, 2);
    PcmAudio a = fixture::tone(8000, 2048, {97.0, 710.0, 2300.0}, 0.6);
    RngStream rng(4, 4);
    for (auto& s : a.samples) s = static_cast<std::int16_t>(s + static_cast<int>(rng.below(200)) - 100);
    const auto raw = enc.raw_features(a);
    for (std::size_t fr : {std::size_t{0}, raw.size() - 1}) {
        const auto oracle = dft_band_log_energy(a, fr);
        for (std::size_t b = 0; b < kRawFeatureCount; ++b) EXPECT_NEAR(raw[fr][b], oracle[b], 1e-6) << "band " << b;
    }
}

TEST(AudioEncoder, Errors) {
    const AudioEncoder enc(64, 2);
    PcmAudio stereo = fixture::tone(16000, 4096, {300.0}, 0.5);
    stereo.channels = 2;
    EXPECT_THROW(enc.encode(stereo), Error);
    PcmAudio empty;
    EXPECT_THROW(enc.encode(empty), Error);
    EXPECT_THROW(enc.encode(fixture::tone(16000, 1000, {300.0}, 0.5)), Error);
}

TEST(Encoders, SeparateSeedsGiveSeparateProjections) {
    const ImageEncoder img(64, 4, 0x696D67);
    const AudioEncoder aud(64, 0x617564);
    EXPECT_EQ(img.projection().size(), aud.projection().size());
    EXPECT_NE(img.projection(), aud.projection());
}
