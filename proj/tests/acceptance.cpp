// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion. Exits non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include <fmt/core.h>

#include "fixture.hpp"
#include "grad_suite.hpp"
#include "probes.hpp"
#include "s3kit/metrics.hpp"
#include "s3kit/trainer.hpp"

using namespace s3kit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string name;
    double limit_seconds;
    std::function<Outcome()> run;
};

constexpr double kGradTolerance = 1e-3;
constexpr double kLoraZeroTolerance = 1e-6;
constexpr double kLoraMergeTolerance = 1e-5;
constexpr double kOverfitLoss = 0.1;
constexpr std::size_t kOverfitMinExact = 30;
constexpr double kMetricTolerance = 1e-9;

Outcome render_exact() {
    const std::string expected =
        "[RS][user][M][img][img][img][img][/M][/RS][RS][user]What is it?[/RS][RS][bot]A red apple with red worm[/RS]";
    const std::string got = render_dialog(fixture::apple_dialog());
    return {got == expected, got == expected ? "exact match" : "got " + got};
}

Outcome gradient_suite() {
    double worst = 0.0;
    std::string worst_case;
    std::size_t checks = 0;
    for (const auto& c : fixture::grad_cases()) {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto r = c.run(seed);
            checks += r.coords_checked;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_case = fmt::format("{} seed {}", c.name, seed);
            }
        }
    }
    return {worst < kGradTolerance, fmt::format("{} cases x 50 seeds, {} coordinates, max rel err {:.3g} ({})",
                                                fixture::grad_cases().size(), checks, worst, worst_case)};
}

Outcome projector_contract() {
    RngStream rng(3, 0);
    const Projector<float> p(ProjectorConfig{}, rng);
    const std::size_t width = p.layers().back().weight.dim(1);
    bool ok = width == 128;
    std::string shapes;
    for (std::size_t rows : {1u, 4u, 16u, 57u}) {
        FeatureMatrix f{rows, 64, std::vector<float>(rows * 64)};
        RngStream fr(rows, 1);
        for (auto& v : f.data) v = static_cast<float>(fr.normal());
        const auto out = p.project(f);
        ok = ok && out.shape() == Shape{4, 32};
        shapes += fmt::format(" {}->{}", rows, shape_string(out.shape()));
    }
    return {ok, fmt::format("pre-split width {};{}", width, shapes)};
}

Outcome lora_identity() {
    LoraConfig lora;
    lora.targets = {"q", "k", "v", "o"};
    const auto probe = fixture::probe_lora(LMConfig{}, lora, 100, 2026);
    const bool ok = probe.inputs == 100 && probe.zero_b_max_diff <= kLoraZeroTolerance &&
                    probe.merge_max_diff <= kLoraMergeTolerance;
    return {ok, fmt::format("{} inputs, zero-B max diff {:.3g}, merged max diff {:.3g}", probe.inputs,
                            probe.zero_b_max_diff, probe.merge_max_diff)};
}

Outcome overfit() {
    fixture::TempDir dir("accept-overfit");
    const auto dialogs = fixture::write_overfit_corpus(dir.path());
    const auto tc = fixture::overfit_train_config();
    auto model = MultimodalModel::create(fixture::overfit_model_config(), tc.seed);
    auto prepared = prepare_all(model, dialogs, dir.path(), 1);
    Trainer trainer(std::move(model), tc, prepared);
    trainer.run();

    std::vector<std::size_t> all(prepared.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double loss = trainer.evaluate(all);

    std::size_t exact = 0;
    for (const auto& d : dialogs) {
        Dialog context = d;
        const std::string answer = context.messages.back().content;
        context.messages.pop_back();
        exact += trainer.model().generate(trainer.model().prepare(context, dir.path()), answer.size() + 16) == answer;
    }
    return {trainer.current_step() <= 300 && loss < kOverfitLoss && exact >= kOverfitMinExact,
            fmt::format("{} steps, masked loss {:.4f}, {}/{} answers reproduced", trainer.current_step(), loss, exact,
                        dialogs.size())};
}

Outcome metric_oracles() {
    std::vector<std::string> failures;
    auto check = [&](const std::string& what, double got, double want, double tol) {
        if (!(std::abs(got - want) <= tol)) failures.push_back(fmt::format("{}: {} vs {}", what, got, want));
    };
    check("hm certain", hidden_metric(std::vector<double>{0.0, 0.0}), 1.0, kMetricTolerance);
    check("hm e^-1", hidden_metric(std::vector<double>{-1.0, -1.0}), std::exp(-1.0), kMetricTolerance);
    check("hm half", hidden_metric(std::vector<double>{std::log(0.5)}), 0.5, kMetricTolerance);
    check("meteor disjoint", meteor("green door", "red apple"), 0.0, kMetricTolerance);
    check("meteor one word", meteor("apple", "apple"), 0.5, kMetricTolerance);
    check("meteor four words", meteor("a red apple today", "a red apple today"), 0.9921875, kMetricTolerance);
    std::vector<DialogScore> each;
    for (std::size_t j = 0; j < kDialogTypeCount; ++j) each.push_back({static_cast<DialogType>(j), 1.0, 1.0});
    const double perfect = integral_metric(each).integral;
    if (perfect != 1.0) failures.push_back(fmt::format("integral perfect: {:.17g}", perfect));
    const std::vector<DialogScore> pair = {{DialogType::text_image, 0.4, 0.6}, {DialogType::text_image, 0.2, 0.2}};
    check("integral pair", integral_metric(pair).integral, 0.07, 1e-12);
    check("integral single text", integral_metric(std::vector<DialogScore>{{DialogType::text, 1.0, 1.0}}).integral,
          0.1, kMetricTolerance);
    if (failures.empty()) return {true, "9 oracle cases"};
    std::string detail;
    for (const auto& f : failures) detail += f + "; ";
    return {false, detail};
}

Outcome mixture_fidelity() {
    fixture::TempDir dir("accept-mixture");
    const auto full = build_mixture(load_manifest(fixture::write_table_manifest(dir.path() / "full", 1.0)), 42);
    std::map<std::string, std::uint64_t> per;
    for (const auto& d : full) ++per[d.source.value_or("")];
    bool rows_ok = true;
    for (const auto& row : fixture::mixture_table()) rows_ok = rows_ok && per[row.dataset] == row.samples;

    const auto scaled_manifest = load_manifest(fixture::write_table_manifest(dir.path() / "scaled", 0.01));
    MixtureOptions four;
    four.workers = 4;
    const auto a = build_mixture(scaled_manifest, 9);
    const auto b = build_mixture(scaled_manifest, 9);
    const auto c = build_mixture(scaled_manifest, 9, four);
    std::map<std::string, std::uint64_t> scaled_per;
    for (const auto& d : a) ++scaled_per[d.source.value_or("")];
    bool scaled_ok = true;
    for (const auto& e : scaled_manifest.entries) scaled_ok = scaled_ok && scaled_per[e.dataset_name] == e.sample_count;
    const bool identical = serialize_dialogs(a) == serialize_dialogs(b) && serialize_dialogs(a) == serialize_dialogs(c);
    return {full.size() == 145'250 && rows_ok && scaled_ok && identical,
            fmt::format("full {} dialogs, rows {}, scaled {} dialogs counts {}, reruns {}", full.size(),
                        rows_ok ? "match" : "differ", a.size(), scaled_ok ? "match" : "differ",
                        identical ? "byte-identical" : "differ")};
}

Outcome determinism_and_resume() {
    fixture::TempDir dir("accept-resume");
    const auto dialogs = fixture::write_overfit_corpus(dir.path());
    auto tc = fixture::overfit_train_config();
    tc.batch_size = 8;
    tc.micro_batch = 4;
    tc.total_steps = 20;
    const auto mc = fixture::overfit_model_config();
    const auto base = MultimodalModel::create(mc, tc.seed);

    Trainer one(mc, tc, prepare_all(base, dialogs, dir.path(), 1));
    Trainer four(mc, tc, prepare_all(base, dialogs, dir.path(), 4));
    for (int i = 0; i < 10; ++i) {
        one.step();
        four.step();
    }
    const bool workers_ok = one.loss_history() == four.loss_history();

    save_checkpoint(dir.path() / "mid.s3ck", one.checkpoint());
    Trainer resumed = Trainer::resume(load_checkpoint(dir.path() / "mid.s3ck"), four.data());
    one.run();
    resumed.run();
    const std::vector<double> tail_a(one.loss_history().begin() + 10, one.loss_history().end());
    const std::vector<double> tail_b(resumed.loss_history().begin() + 10, resumed.loss_history().end());
    const bool resume_ok = tail_a.size() == 10 && tail_a == tail_b;
    return {workers_ok && resume_ok, fmt::format("1 vs 4 workers {}, next 10 losses after reload {}",
                                                 workers_ok ? "identical" : "differ", resume_ok ? "bit-exact" : "differ")};
}

Outcome causality() {
    const auto probe = fixture::probe_causality(LMConfig{}, 5, 10, 99);
    return {probe.cases == 50 && probe.max_prefix_change == 0.0 && probe.min_self_change > 0.0,
            fmt::format("{} perturbations, max change before the perturbed row {:.3g}, min change at it {:.3g}",
                        probe.cases, probe.max_prefix_change, probe.min_self_change)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "render bit-exactness", 1, render_exact},
        {2, "gradient suite", 60, gradient_suite},
        {3, "projector contract", 1, projector_contract},
        {4, "LoRA identity", 30, lora_identity},
        {5, "overfitting sanity", 600, overfit},
        {6, "metric oracles", 1, metric_oracles},
        {7, "mixture fidelity", 120, mixture_fidelity},
        {8, "determinism and resume", 600, determinism_and_resume},
        {9, "causality", 60, causality},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        fmt::print("{} [{}] {}: {} ({:.2f}s, limit {}s{})\n", pass ? "PASS" : "FAIL", c.number, c.name, o.detail, secs,
                   c.limit_seconds, in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    fmt::print("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
