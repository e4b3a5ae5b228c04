// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixture.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include <unistd.h>

#include <fmt/format.h>

#include "s3kit/error.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/util.hpp"

namespace s3kit::fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const auto base = fs::temp_directory_path();
    for (;;) {
        path_ = base / fmt::format("s3kit-{}-{}-{}", tag, ::getpid(), counter++);
        if (fs::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

Dialog apple_dialog() {
    Dialog d;
    d.messages = {{Role::user, MessageKind::image, "apple.ppm"},
                  {Role::user, MessageKind::text, "What is it?"},
                  {Role::bot, MessageKind::text, "A red apple with red worm"}};
    return d;
}

Image random_image(std::size_t width, std::size_t height, std::uint64_t seed) {
    Image img{width, height, std::vector<std::uint8_t>(width * height * 3)};
    RngStream rng(seed, 7);
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

PcmAudio tone(std::uint32_t sample_rate, std::size_t samples, const std::vector<double>& freqs, double amplitude) {
    PcmAudio a;
    a.sample_rate = sample_rate;
    a.samples.resize(samples);
    for (std::size_t n = 0; n < samples; ++n) {
        double v = 0.0;
        for (double f : freqs) v += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(n) / sample_rate);
        v *= amplitude / static_cast<double>(std::max<std::size_t>(1, freqs.size()));
        a.samples[n] = static_cast<std::int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
    }
    return a;
}

namespace {

struct ImageSpec {
    std::uint8_t r, g, b;
    int pattern; // 0 solid, 1 stripes, 2 checker
    const char* answer;
};

struct AudioSpec {
    std::vector<double> freqs;
    double amplitude;
    const char* answer;
};

Image make_image(const ImageSpec& s, std::uint64_t seed) {
    constexpr std::size_t kSide = 16;
    Image img{kSide, kSide, std::vector<std::uint8_t>(kSide * kSide * 3)};
    RngStream rng(seed, 11);
    for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
            double shade = 1.0;
            if (s.pattern == 1) shade = (y / 2) % 2 ? 0.45 : 1.0;
            if (s.pattern == 2) shade = ((x / 4) + (y / 4)) % 2 ? 0.35 : 1.0;
            const std::uint8_t base[3] = {s.r, s.g, s.b};
            for (int c = 0; c < 3; ++c) {
                const double v = base[c] * shade + static_cast<double>(rng.below(9)) - 4.0;
                img.rgb[(y * kSide + x) * 3 + c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return img;
}

const std::vector<ImageSpec>& image_specs() {
    static const std::vector<ImageSpec> specs = {
        {220, 30, 30, 0, "A red apple with red worm"},
        {30, 200, 40, 0, "Green grass in a field"},
        {40, 60, 220, 0, "A clear blue sky"},
        {240, 220, 40, 0, "A yellow taxi at night"},
        {250, 250, 250, 0, "Fresh snow on a roof"},
        {20, 20, 20, 0, "A black cat sleeping"},
        {220, 30, 30, 1, "A striped red awning"},
        {40, 60, 220, 1, "Ocean waves at dawn"},
        {30, 200, 40, 2, "A green chess board"},
        {240, 140, 20, 2, "Orange tiles on a wall"},
        {150, 60, 200, 1, "Purple curtains"},
        {130, 130, 130, 2, "A grey stone path"},
        {200, 120, 160, 0, "A pink flamingo"},
    };
    return specs;
}

const std::vector<AudioSpec>& audio_specs() {
    static const std::vector<AudioSpec> specs = {
        {{80.0}, 0.8, "A low hum of an engine"},
        {{150.0}, 0.8, "A large drum"},
        {{270.0}, 0.8, "A cello playing"},
        {{500.0}, 0.8, "A doorbell ringing"},
        {{900.0}, 0.8, "A kettle whistling"},
        {{1600.0}, 0.8, "Birds singing"},
        {{3000.0}, 0.8, "A mosquito buzzing"},
        {{150.0, 900.0}, 0.8, "A car horn"},
        {{270.0, 1600.0}, 0.8, "Children laughing"},
        {{500.0}, 0.15, "A distant phone"},
    };
    return specs;
}

const std::vector<std::pair<const char*, const char*>>& text_pairs() {
    static const std::vector<std::pair<const char*, const char*>> pairs = {
        {"What is the capital of France?", "Paris"},
        {"How many legs does a spider have?", "Eight legs"},
        {"What color is a banana?", "Usually yellow"},
        {"Name a planet with rings.", "Saturn"},
        {"What do bees make?", "Honey"},
        {"What is two plus three?", "Five"},
        {"Which animal says moo?", "A cow"},
        {"What freezes into ice?", "Water"},
    };
    return pairs;
}

} // namespace

std::vector<Dialog> write_overfit_corpus(const fs::path& dir) {
    fs::create_directories(dir / "media");
    std::vector<Dialog> out;
    const auto& q = QuestionTemplates::defaults();
    const auto& images = image_specs();
    const auto& sounds = audio_specs();

    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string rel = fmt::format("media/img{:02}.ppm", i);
        write_ppm(dir / rel, make_image(images[i], 100 + i));
        Dialog d;
        d.messages = {{Role::user, MessageKind::image, rel},
                      {Role::user, MessageKind::text, q.image[i % q.image.size()]},
                      {Role::bot, MessageKind::text, images[i].answer}};
        if (i % 3 == 0) d.system_prompt = "Answer the question using a single word or phrase";
        out.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < sounds.size(); ++i) {
        const std::string rel = fmt::format("media/snd{:02}.wav", i);
        write_wav(dir / rel, tone(8000, 4096, sounds[i].freqs, sounds[i].amplitude));
        Dialog d;
        d.messages = {{Role::user, MessageKind::audio, rel},
                      {Role::user, MessageKind::text, q.audio[i % q.audio.size()]},
                      {Role::bot, MessageKind::text, sounds[i].answer}};
        out.push_back(std::move(d));
    }
    // Image and audio in one dialog, reusing earlier media.
    {
        Dialog d;
        d.messages = {{Role::user, MessageKind::image, "media/img02.ppm"},
                      {Role::user, MessageKind::audio, "media/snd05.wav"},
                      {Role::user, MessageKind::text, "What do you see and hear?"},
                      {Role::bot, MessageKind::text, "Birds under a blue sky"}};
        out.push_back(std::move(d));
    }
    for (const auto& [question, answer] : text_pairs()) {
        Dialog d;
        d.system_prompt = "You are helpful AI assistant";
        d.messages = {{Role::user, MessageKind::text, question}, {Role::bot, MessageKind::text, answer}};
        out.push_back(std::move(d));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
    write_dialogs(dir / "dialogs.jsonl", out);
    return out;
}

ModelConfig overfit_model_config() {
    ModelConfig c;
    c.lm.d_model = 64;
    c.lm.n_heads = 4;
    c.lm.d_ff = 128;
    c.lm.max_seq_len = 128;
    return c;
}

TrainConfig overfit_train_config() {
    TrainConfig t;
    t.batch_size = 32;
    t.micro_batch = 8;
    t.lr0 = 1e-2;
    t.total_steps = 300;
    t.seed = 7;
    t.adamw.weight_decay = 0.0;
    return t;
}

const std::vector<TableRow>& mixture_table() {
    static const std::vector<TableRow> rows = {
        {Task::image, "COCO", 5000, "Provide a one-sentence answer for the provided question"},
        {Task::image, "GQA", 10000, "Answer the question using a single phrase"},
        {Task::image, "ImageChat", 5000, "Show reaction and emotion in response to images"},
        {Task::image, "Visual Dialog", 24000, "Answer the question using a single word or phrase"},
        {Task::image, "LLaVA", 31000, "Answer questions thoroughly and in detail"},
        {Task::image, "ScienceQA", 10000, "Answer with the option’s letter from the given choices directly"},
        {Task::image, "OCR-VQA", 1000, "Answer the question using a single word or phrase"},
        {Task::image, "TextCaps", 14000, "Answer the question using a single word or phrase"},
        {Task::image, "VizWiz", 10000, "Answer the question using a single word or phrase"},
        {Task::image, "Visual Genome", 5500, "Answer the question using a single word or phrase"},
        {Task::image, "OKVQA", 5000, "Answer the question using a single word or phrase"},
        {Task::image, "AOKVQA", 10000, "Answer questions thoroughly and in detail"},
        {Task::audio, "CLOTHO-Captions", 3750, "Answer the question using a single word or phrase"},
        {Task::audio, "CLOTHO-AQA", 1000, "Answer the question using a single word or phrase"},
        {Task::audio, "AudioSet", 5000, "Provide a one-sentence answer for the provided question"},
        {Task::text, "OpenAssistant", 5000, "You are helpful AI assistant"},
    };
    return rows;
}

fs::path write_table_manifest(const fs::path& dir, double scale) {
    fs::create_directories(dir);
    MixtureManifest manifest;
    const auto& rows = mixture_table();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto count = static_cast<std::uint64_t>(std::ceil(static_cast<double>(row.samples) * scale));
        std::string text;
        text.reserve(count * 96);
        for (std::uint64_t i = 0; i < count; ++i) {
            Dialog d;
            d.id = i;
            if (row.task == Task::image)
                d.messages.push_back({Role::user, MessageKind::image, fmt::format("img/{}/{}.ppm", r, i)});
            if (row.task == Task::audio)
                d.messages.push_back({Role::user, MessageKind::audio, fmt::format("snd/{}/{}.wav", r, i)});
            d.messages.push_back({Role::user, MessageKind::text, fmt::format("q{}", i)});
            d.messages.push_back({Role::bot, MessageKind::text, fmt::format("a{}", i)});
            if (i % 4 == 0) d.messages.erase(d.messages.begin(), d.messages.end() - 2);
            text += serialize_dialog(d);
            text += '\n';
        }
        const std::string file = fmt::format("source{:02}.jsonl", r);
        write_file(dir / file, text);
        manifest.entries.push_back({row.dataset, dir / file, count, row.system_prompt, row.task});
    }
    const fs::path path = dir / "manifest.json";
    write_file(path, serialize_manifest(manifest));
    return path;
}

} // namespace s3kit::fixture
