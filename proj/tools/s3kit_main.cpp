// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// s3kit: command-line front end.
//
//   s3kit prepare-data --manifest m.json --seed 1 --out mix.jsonl
//   s3kit render dialogs.jsonl
//   s3kit train --config run.cfg --out model.s3ck
//   s3kit eval --checkpoint model.s3ck --data test.jsonl --out preds.jsonl
//   s3kit score preds.jsonl
//   s3kit chat --checkpoint model.s3ck
//   s3kit export-features --out feats/ a.ppm b.wav
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "s3kit/chatfmt.hpp"
#include "s3kit/error.hpp"
#include "s3kit/metrics.hpp"
#include "s3kit/model.hpp"
#include "s3kit/tokenizer.hpp"
#include "s3kit/trainer.hpp"
#include "s3kit/util.hpp"

namespace fs = std::filesystem;
using namespace s3kit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("s3kit");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("S3KIT_LOG")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string(env) != "off") {
            spdlog::warn("S3KIT_LOG='{}' is not a level; keeping info", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_file(out, text);
    }
}

std::pair<Dialog, std::string> split_last_answer(const Dialog& d) {
    if (d.messages.empty() || d.messages.back().role != Role::bot) {
        throw data_error("dialog " + std::to_string(d.id) + " does not end with a bot message");
    }
    Dialog context = d;
    std::string answer = context.messages.back().content;
    context.messages.pop_back();
    return {std::move(context), std::move(answer)};
}

struct PrepareArgs {
    std::string manifest, out = "-";
    std::uint64_t seed = 0;
    double combine_fraction = 0.2;
    bool allow_replacement = false;
    std::size_t workers = 1;
};

int cmd_prepare(const PrepareArgs& a) {
    const auto manifest = load_manifest(a.manifest);
    MixtureOptions opt;
    opt.combine_fraction = a.combine_fraction;
    opt.allow_replacement = a.allow_replacement;
    opt.workers = a.workers;
    const auto mixture = build_mixture(manifest, a.seed, opt);
    emit(serialize_dialogs(mixture), a.out);
    spdlog::info("wrote {} dialogs", mixture.size());
    return 0;
}

struct RenderArgs {
    std::string input, out = "-";
    std::size_t n_tokens = kDefaultModalityTokens;
};

int cmd_render(const RenderArgs& a) {
    std::string text;
    for (const auto& d : read_dialogs(a.input)) text += render_dialog(d, a.n_tokens) + "\n";
    emit(text, a.out);
    return 0;
}

struct TrainArgs {
    std::string config, data, media_root, out;
    std::optional<std::uint64_t> seed, steps;
    std::optional<std::size_t> workers, n_tokens;
};

int cmd_train(const TrainArgs& a) {
    RunConfig rc = load_run_config(a.config);
    if (!a.data.empty()) {
        rc.data = a.data;
        if (a.media_root.empty()) rc.media_root = fs::path(a.data).parent_path().string();
    }
    if (!a.media_root.empty()) rc.media_root = a.media_root;
    if (a.seed) rc.train.seed = *a.seed;
    if (a.steps) rc.train.total_steps = *a.steps;
    if (a.workers) rc.train.workers = *a.workers;
    if (a.n_tokens) rc.model.n_modality_tokens = *a.n_tokens;
    if (rc.data.empty()) throw usage_error("no training data: set 'data' in the config or pass --data");

    const auto dialogs = read_dialogs(rc.data);
    auto model = MultimodalModel::create(rc.model, rc.train.seed);
    auto prepared = prepare_all(model, dialogs, rc.media_root, rc.train.workers);
    Trainer trainer(std::move(model), rc.train, std::move(prepared));
    spdlog::info("training {} dialogs for {} steps", dialogs.size(), rc.train.total_steps);
    while (trainer.current_step() < rc.train.total_steps) {
        const double loss = trainer.step();
        spdlog::debug("step {} loss {:.6f}", trainer.current_step(), loss);
    }
    save_checkpoint(a.out, trainer.checkpoint());
    if (!trainer.loss_history().empty()) spdlog::info("final loss {:.6f}", trainer.loss_history().back());
    return 0;
}

struct EvalArgs {
    std::string checkpoint, data, media_root, out = "-", report;
    std::size_t max_new_tokens = 128;
    std::size_t workers = 1;
    std::string hm_on = "reference";
};

int cmd_eval(const EvalArgs& a) {
    if (a.hm_on != "reference" && a.hm_on != "generated") throw usage_error("--hm-on must be reference or generated");
    const auto ck = load_checkpoint(a.checkpoint);
    const auto model = restore_model(ck);
    const auto dialogs = read_dialogs(a.data);
    const fs::path root = a.media_root.empty() ? fs::path(a.data).parent_path() : fs::path(a.media_root);
    std::vector<PredictionRecord> records(dialogs.size());
    parallel_for(dialogs.size(), a.workers, [&](std::size_t i) {
        const auto& d = dialogs[i];
        auto [context, reference] = split_last_answer(d);
        auto features = [&] {
            std::vector<FeatureMatrix> f;
            for (const auto& m : d.messages)
                if (m.kind != MessageKind::text) f.push_back(model.encode_media(m, root));
            return f;
        }();
        PredictionRecord r;
        r.id = d.id;
        r.type = classify_dialog(d);
        r.reference = reference;
        r.hypothesis = model.generate(model.prepare(context, features), a.max_new_tokens);
        Dialog scored = d;
        if (a.hm_on == "generated" && !r.hypothesis.empty()) scored.messages.back().content = r.hypothesis;
        r.log_probs = model.answer_log_probs(model.prepare(scored, std::move(features)));
        records[i] = std::move(r);
    });
    std::string lines;
    for (const auto& r : records) lines += serialize_prediction(r) + "\n";
    emit(lines, a.out);
    const auto report = integral_metric(score_predictions(records));
    std::cerr << report_table(report);
    if (!a.report.empty()) write_file(a.report, report_json(report) + "\n");
    return 0;
}

struct ScoreArgs {
    std::string input, out;
};

int cmd_score(const ScoreArgs& a) {
    const auto records = read_predictions(a.input);
    if (records.empty()) throw usage_error("predictions file '" + a.input + "' holds no records");
    const auto report = integral_metric(score_predictions(records));
    std::cout << report_table(report);
    if (!a.out.empty()) write_file(a.out, report_json(report) + "\n");
    return 0;
}

struct ChatArgs {
    std::string checkpoint, media_root, system_prompt = "Answer questions thoroughly and in detail";
    std::size_t max_new_tokens = 128;
};

int cmd_chat(const ChatArgs& a) {
    const auto model = restore_model(load_checkpoint(a.checkpoint));
    Dialog history;
    if (!a.system_prompt.empty()) history.system_prompt = a.system_prompt;
    std::vector<FeatureMatrix> features;
    std::cout << "commands: /img PATH, /audio PATH, /reset, /quit\n";
    for (std::string line; std::cout << "> " << std::flush, std::getline(std::cin, line);) {
        if (line.empty()) continue;
        if (line == "/quit" || line == "/exit") break;
        if (line == "/reset") {
            history.messages.clear();
            features.clear();
            continue;
        }
        const bool is_img = line.starts_with("/img "), is_audio = line.starts_with("/audio ");
        if (is_img || is_audio) {
            const Message m{Role::user, is_img ? MessageKind::image : MessageKind::audio,
                            line.substr(is_img ? 5 : 7)};
            try {
                features.push_back(model.encode_media(m, a.media_root));
                history.messages.push_back(m);
                std::cout << "attached " << m.content << "\n";
            } catch (const std::exception& e) {
                std::cout << "cannot attach: " << e.what() << "\n";
            }
            continue;
        }
        if (line.starts_with("/")) {
            std::cout << "unknown command\n";
            continue;
        }
        history.messages.push_back({Role::user, MessageKind::text, line});
        try {
            const std::string reply = model.generate(model.prepare(history, features), a.max_new_tokens);
            std::cout << reply << "\n";
            if (!reply.empty()) history.messages.push_back({Role::bot, MessageKind::text, reply});
        } catch (const std::exception& e) {
            history.messages.pop_back();
            std::cout << "error: " << e.what() << "\n";
        }
    }
    return 0;
}

struct ExportArgs {
    std::vector<std::string> inputs;
    std::string checkpoint, out = ".";
    std::size_t d_enc = 64, grid = 4;
    std::uint64_t seed = 0;
};

int cmd_export(const ExportArgs& a) {
    std::optional<MultimodalModel> model;
    if (!a.checkpoint.empty()) {
        model.emplace(restore_model(load_checkpoint(a.checkpoint)));
    } else {
        ModelConfig c;
        c.d_enc = a.d_enc;
        c.image_grid = a.grid;
        if (a.seed != 0) {
            c.image_seed = a.seed;
            c.audio_seed = a.seed + 1;
        }
        model.emplace(MultimodalModel::create(c, 0));
    }
    fs::create_directories(a.out);
    for (const auto& in : a.inputs) {
        const fs::path p(in);
        const auto ext = p.extension().string();
        MessageKind kind;
        if (ext == ".ppm") kind = MessageKind::image;
        else if (ext == ".wav") kind = MessageKind::audio;
        else throw usage_error("cannot infer the modality of '" + in + "' (expected .ppm or .wav)");
        const auto f = model->encode_media({Role::user, kind, p.string()}, {});
        const fs::path dst = fs::path(a.out) / (p.stem().string() + ".s3ft");
        save_features(dst, f);
        std::cout << fmt::format("{} -> {} ({}x{})\n", in, dst.string(), f.rows, f.cols);
    }
    return 0;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return kExitUsage;
    case ErrorKind::data: return kExitData;
    case ErrorKind::numeric: return kExitNumeric;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"s3kit: shallow multimodal alignment toolkit"};
    app.require_subcommand(1, 1);

    PrepareArgs prep;
    auto* c_prep = app.add_subcommand("prepare-data", "Build a training mixture from a manifest");
    c_prep->add_option("--manifest", prep.manifest, "Mixture manifest JSON")->required();
    c_prep->add_option("--seed", prep.seed, "Sampling seed");
    c_prep->add_option("--out", prep.out, "Output JSONL ('-' for stdout)");
    c_prep->add_option("--combine-fraction", prep.combine_fraction, "Share of short dialogs to extend")
        ->check(CLI::Range(0.0, 1.0));
    c_prep->add_flag("--allow-replacement", prep.allow_replacement, "Resample when a dataset is too small");
    c_prep->add_option("--workers", prep.workers, "Parallel source readers")->check(CLI::PositiveNumber);

    RenderArgs render;
    auto* c_render = app.add_subcommand("render", "Print the token-grammar string of each dialog");
    c_render->add_option("dialogs", render.input, "Dialog JSONL")->required();
    c_render->add_option("--n-modality-tokens", render.n_tokens, "Placeholders per media object")
        ->check(CLI::PositiveNumber);
    c_render->add_option("--out", render.out, "Output file ('-' for stdout)");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train and write a checkpoint");
    c_train->add_option("--config", train.config, "key = value run configuration")->required();
    c_train->add_option("--data", train.data, "Dialog JSONL (overrides the config)");
    c_train->add_option("--media-root", train.media_root, "Directory media paths are relative to");
    c_train->add_option("--out", train.out, "Checkpoint path")->required();
    c_train->add_option("--seed", train.seed, "Overrides the config seed");
    c_train->add_option("--steps", train.steps, "Overrides total_steps");
    c_train->add_option("--workers", train.workers, "Media encoding workers")->check(CLI::PositiveNumber);
    c_train->add_option("--n-modality-tokens", train.n_tokens, "Placeholders per media object")
        ->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Generate answers and score them");
    c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
    c_eval->add_option("--data", ev.data, "Dialog JSONL; the last bot message is the reference")->required();
    c_eval->add_option("--media-root", ev.media_root, "Directory media paths are relative to");
    c_eval->add_option("--out", ev.out, "Predictions JSONL ('-' for stdout)");
    c_eval->add_option("--report", ev.report, "Report JSON path");
    c_eval->add_option("--max-new-tokens", ev.max_new_tokens, "Generation bound");
    c_eval->add_option("--workers", ev.workers, "Parallel dialogs")->check(CLI::PositiveNumber);
    c_eval->add_option("--hm-on", ev.hm_on, "Score likelihood of the reference or the generated answer")
        ->check(CLI::IsMember({"reference", "generated"}));

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Compute metrics from a predictions file");
    c_score->add_option("predictions", score.input, "Predictions JSONL")->required();
    c_score->add_option("--out", score.out, "Report JSON path");

    ChatArgs chat;
    auto* c_chat = app.add_subcommand("chat", "Interactive session");
    c_chat->add_option("--checkpoint", chat.checkpoint, "Checkpoint path")->required();
    c_chat->add_option("--media-root", chat.media_root, "Directory media paths are relative to");
    c_chat->add_option("--system-prompt", chat.system_prompt, "System prompt ('' for none)");
    c_chat->add_option("--max-new-tokens", chat.max_new_tokens, "Generation bound");

    ExportArgs exp;
    auto* c_exp = app.add_subcommand("export-features", "Encode media files to S3FT");
    c_exp->add_option("inputs", exp.inputs, ".ppm or .wav files")->required();
    c_exp->add_option("--out", exp.out, "Output directory");
    c_exp->add_option("--checkpoint", exp.checkpoint, "Take encoder projections from a checkpoint");
    c_exp->add_option("--d-enc", exp.d_enc, "Feature width without a checkpoint")->check(CLI::PositiveNumber);
    c_exp->add_option("--grid", exp.grid, "Image patch grid without a checkpoint")->check(CLI::PositiveNumber);
    c_exp->add_option("--seed", exp.seed, "Projection seed without a checkpoint");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*c_prep) return cmd_prepare(prep);
        if (*c_render) return cmd_render(render);
        if (*c_train) return cmd_train(train);
        if (*c_eval) return cmd_eval(ev);
        if (*c_score) return cmd_score(score);
        if (*c_chat) return cmd_chat(chat);
        if (*c_exp) return cmd_export(exp);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitData;
    }
    return kExitUsage;
}
