// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "fixture.hpp"
#include "s3kit/error.hpp"
#include "s3kit/trainer.hpp"
#include "s3kit/util.hpp"

using namespace s3kit;

namespace {

ModelConfig small_model() {
    ModelConfig c;
    c.d_enc = 16;
    c.projector.d_hidden = 32;
    c.lm.d_model = 16;
    c.lm.n_heads = 2;
    c.lm.d_ff = 32;
    c.lm.max_seq_len = 128;
    return c;
}

TrainConfig small_train(std::uint64_t steps) {
    TrainConfig t;
    t.batch_size = 8;
    t.micro_batch = 4;
    t.lr0 = 3e-3;
    t.total_steps = steps;
    t.seed = 21;
    return t;
}

class TrainerTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new fixture::TempDir("trainer");
        dialogs_ = new std::vector<Dialog>(fixture::write_overfit_corpus(dir_->path()));
    }
    static void TearDownTestSuite() {
        delete dialogs_;
        delete dir_;
    }

    std::vector<PreparedDialog> prepared(std::size_t workers = 1) const {
        const auto model = MultimodalModel::create(small_model(), 0);
        return prepare_all(model, *dialogs_, dir_->path(), workers);
    }

    static fixture::TempDir* dir_;
    static std::vector<Dialog>* dialogs_;
};

fixture::TempDir* TrainerTest::dir_ = nullptr;
std::vector<Dialog>* TrainerTest::dialogs_ = nullptr;

bool same_bits(const std::vector<NamedTensor<float>>& a, const std::vector<NamedTensor<float>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape()) return false;
        if (std::memcmp(a[i].tensor.data().data(), b[i].tensor.data().data(), a[i].tensor.size() * sizeof(float)) != 0)
            return false;
    }
    return true;
}

} // namespace

TEST(TrainConfig, Validation) {
    TrainConfig t;
    EXPECT_NO_THROW(t.validate());
    EXPECT_EQ(t.accumulation_steps(), 16u);
    t.micro_batch = 7;
    EXPECT_THROW(t.validate(), Error);
    t = TrainConfig{};
    t.lr0 = 0;
    EXPECT_THROW(t.validate(), Error);
    t = TrainConfig{};
    t.lr_min = 1.0;
    EXPECT_THROW(t.validate(), Error);
    t = TrainConfig{};
    t.workers = 0;
    EXPECT_THROW(t.validate(), Error);
}

TEST(RunConfig, ParsesKeysAndComments) {
    const auto rc = parse_run_config(
        "# tiny run\n"
        "data = dialogs.jsonl\n"
        "batch_size = 16   # per step\n"
        "micro_batch=4\n"
        "lr0 = 2.5e-3\n"
        "lora_targets = q, k ,v\n"
        "aggregation = flatten_fixed\n"
        "loss_scope = all_tokens\n"
        "train_base = true\n",
        "/tmp/run");
    EXPECT_EQ(rc.data, "/tmp/run/dialogs.jsonl");
    EXPECT_EQ(rc.media_root, "/tmp/run");
    EXPECT_EQ(rc.train.batch_size, 16u);
    EXPECT_EQ(rc.train.micro_batch, 4u);
    EXPECT_DOUBLE_EQ(rc.train.lr0, 2.5e-3);
    EXPECT_EQ(rc.model.lora.targets, (std::vector<std::string>{"q", "k", "v"}));
    EXPECT_EQ(rc.model.projector.aggregation, Aggregation::flatten_fixed);
    EXPECT_EQ(rc.model.loss_scope, LossScope::all_tokens);
    EXPECT_TRUE(rc.train.groups.base);
}

TEST(RunConfig, ErrorsNameTheKey) {
    const std::pair<const char*, const char*> cases[] = {
        {"lr0 = fast", "lr0"},          {"batch_size = -3", "batch_size"}, {"colour = red", "colour"},
        {"train_head = maybe", "train_head"}, {"aggregation = max", "aggregation"}, {"just words", "line 1"},
    };
    for (const auto& [text, key] : cases) {
        try {
            parse_run_config(text);
            FAIL() << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.field(), key);
        }
    }
}

TEST(RunConfig, RoundTrip) {
    RunConfig rc;
    rc.data = "/data/x.jsonl";
    rc.media_root = "/media";
    rc.train.lr0 = 0.1 + 0.2;
    rc.train.seed = 0xFFFFFFFFFFFFull;
    rc.model.lora.alpha = 1.0 / 3.0;
    rc.model.lm.n_layers = 3;
    const auto back = parse_run_config(serialize_run_config(rc));
    EXPECT_EQ(serialize_run_config(back), serialize_run_config(rc));
    EXPECT_EQ(back.train.lr0, rc.train.lr0);
    EXPECT_EQ(back.model.lora.alpha, rc.model.lora.alpha);
    EXPECT_EQ(back.train.seed, rc.train.seed);
}

TEST_F(TrainerTest, ZeroStepCheckpointEqualsInitialization) {
    Trainer trainer(small_model(), small_train(0), prepared());
    trainer.run();
    EXPECT_EQ(trainer.current_step(), 0u);
    const auto ck = trainer.checkpoint();
    EXPECT_TRUE(ck.loss_history.empty());
    auto cfg = small_model();
    cfg.normalize();
    EXPECT_TRUE(same_bits(ck.tensors, MultimodalModel::create(cfg, small_train(0).seed).named_tensors()));
    EXPECT_EQ(ck.vocabulary.size(), 8u);
}

TEST_F(TrainerTest, BatchesWalkShuffledEpochs) {
    Trainer trainer(small_model(), small_train(20), prepared());
    const std::size_t n = trainer.data().size();
    ASSERT_EQ(n, 32u);
    // Steps 0..3 cover epoch 0 exactly once.
    std::vector<int> seen(n, 0);
    for (std::uint64_t s = 0; s < 4; ++s)
        for (auto i : trainer.batch_indices(s)) ++seen[i];
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_NE(trainer.batch_indices(0), trainer.batch_indices(4));
    EXPECT_EQ(trainer.batch_indices(5), trainer.batch_indices(5));
}

TEST_F(TrainerTest, BatchLossIsTokenWeighted) {
    Trainer trainer(small_model(), small_train(1), prepared());
    const auto indices = trainer.batch_indices(0);
    // Oracle: pool every supervised position of the batch and average.
    double nll = 0.0;
    std::size_t count = 0;
    {
        NoGradGuard guard;
        for (auto i : indices) {
            const auto in = trainer.model().assemble(trainer.data()[i]);
            const auto logits = trainer.model().lm().forward(in.embeddings);
            for (std::size_t t = 0; t + 1 < in.ids.size(); ++t) {
                if (!in.loss_mask[t + 1]) continue;
                double mx = -1e300, z = 0.0;
                for (std::size_t c = 0; c < logits.cols(); ++c) mx = std::max(mx, static_cast<double>(logits.at(t, c)));
                for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits.at(t, c) - mx);
                nll += mx + std::log(z) - logits.at(t, static_cast<std::size_t>(in.ids[t + 1]));
                ++count;
            }
        }
    }
    EXPECT_NEAR(trainer.evaluate(indices), nll / static_cast<double>(count), 1e-5);
    EXPECT_NEAR(trainer.step(), nll / static_cast<double>(count), 1e-5);
}

TEST_F(TrainerTest, WorkerCountDoesNotChangeTraining) {
    Trainer a(small_model(), small_train(5), prepared(1));
    Trainer b(small_model(), small_train(5), prepared(4));
    a.run();
    b.run();
    EXPECT_EQ(a.loss_history(), b.loss_history());
    EXPECT_TRUE(same_bits(a.model().named_tensors(), b.model().named_tensors()));
}

TEST_F(TrainerTest, ResumeIsBitExact) {
    const auto data = prepared();
    Trainer straight(small_model(), small_train(20), data);
    straight.run();

    Trainer first(small_model(), small_train(20), data);
    for (int i = 0; i < 10; ++i) first.step();
    const std::string bytes = encode_checkpoint(first.checkpoint());
    Trainer second = Trainer::resume(decode_checkpoint(bytes), data);
    EXPECT_EQ(second.current_step(), 10u);
    second.run();
    EXPECT_EQ(second.loss_history(), straight.loss_history());
    EXPECT_TRUE(same_bits(second.model().named_tensors(), straight.model().named_tensors()));
}

TEST_F(TrainerTest, CheckpointFileRoundTrip) {
    Trainer trainer(small_model(), small_train(3), prepared());
    trainer.run();
    const auto ck = trainer.checkpoint();
    fixture::TempDir dir("ck");
    save_checkpoint(dir.path() / "a.s3ck", ck);
    const auto back = load_checkpoint(dir.path() / "a.s3ck");
    EXPECT_EQ(back.step, 3u);
    EXPECT_EQ(back.optimizer_steps, 3u);
    EXPECT_EQ(back.loss_history, ck.loss_history);
    EXPECT_TRUE(same_bits(back.tensors, ck.tensors));
    EXPECT_TRUE(same_bits(back.first_moments, ck.first_moments));
    EXPECT_TRUE(same_bits(back.second_moments, ck.second_moments));
    EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ck));
    EXPECT_TRUE(same_bits(restore_model(back).named_tensors(), trainer.model().named_tensors()));
}

TEST_F(TrainerTest, CorruptCheckpointsAreRejected) {
    Trainer trainer(small_model(), small_train(0), prepared());
    const std::string good = encode_checkpoint(trainer.checkpoint());
    auto expect_data_error = [](const std::string& bytes) {
        try {
            decode_checkpoint(bytes);
            ADD_FAILURE() << "decoded";
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::data) << e.what();
        }
    };
    std::string magic = good;
    magic[0] = 'X';
    expect_data_error(magic);
    std::string version = good;
    version[4] = 9;
    expect_data_error(version);
    expect_data_error(good.substr(0, good.size() / 2));
    expect_data_error(good + "junk");
    std::string manifest = good;
    manifest[12] = '!';
    expect_data_error(manifest);

    auto ck = trainer.checkpoint();
    ck.vocabulary[0] = "[START]";
    EXPECT_THROW(restore_model(ck), Error);
}

TEST_F(TrainerTest, FrozenGroupsStayPut) {
    auto cfg = small_train(3);
    cfg.groups = TrainableGroups{false, true, false, false};
    cfg.train_projector = false;
    Trainer trainer(small_model(), cfg, prepared());
    const auto before = trainer.checkpoint().tensors;
    trainer.run();
    const auto after = trainer.model().named_tensors();
    for (std::size_t i = 0; i < before.size(); ++i) {
        const bool same = std::memcmp(before[i].tensor.data().data(), after[i].tensor.data().data(),
                                      before[i].tensor.size() * sizeof(float)) == 0;
        EXPECT_EQ(same, before[i].name != "lm.head") << before[i].name;
    }
}

TEST_F(TrainerTest, ZeroLearningRateKeepsTheLoss) {
    auto cfg = small_train(4);
    cfg.batch_size = 32;
    cfg.micro_batch = 8;
    Trainer trainer(small_model(), cfg, prepared());
    const double l0 = trainer.step_with_lr(0.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(trainer.step_with_lr(0.0), l0); // each batch is the full set
}

TEST_F(TrainerTest, ScheduleFollowsCosine) {
    auto cfg = small_train(6);
    cfg.lr_min = 1e-4;
    Trainer trainer(small_model(), cfg, prepared());
    for (std::uint64_t s = 0; s < 6; ++s) {
        EXPECT_DOUBLE_EQ(trainer.scheduled_lr(), cosine_lr(s, 6, cfg.lr0, cfg.lr_min));
        trainer.step();
    }
    EXPECT_DOUBLE_EQ(trainer.scheduled_lr(), 1e-4);
    EXPECT_THROW(trainer.step(), Error);
}

TEST_F(TrainerTest, LossDecreases) {
    auto cfg = small_train(40);
    cfg.lr0 = 1e-2;
    Trainer trainer(small_model(), cfg, prepared());
    trainer.run();
    const auto& h = trainer.loss_history();
    double first = 0, last = 0;
    for (int i = 0; i < 4; ++i) {
        first += h[i];
        last += h[h.size() - 1 - i];
    }
    EXPECT_LT(last, 0.8 * first);
}

TEST_F(TrainerTest, UnresolvableMediaFailsPreparation) {
    auto dialogs = *dialogs_;
    for (auto& d : dialogs)
        for (auto& m : d.messages)
            if (m.kind == MessageKind::image) m.content = "media/missing.ppm";
    const auto model = MultimodalModel::create(small_model(), 0);
    EXPECT_THROW(prepare_all(model, dialogs, dir_->path(), 2), Error);
}

TEST(Trainer, EmptyMixtureAndEmptyMasks) {
    EXPECT_THROW(Trainer(small_model(), small_train(1), {}), Error);
    const auto model = MultimodalModel::create(small_model(), 0);
    Dialog d;
    d.messages = {{Role::user, MessageKind::text, "no answer"}};
    std::vector<PreparedDialog> data = {model.prepare(d, std::vector<FeatureMatrix>{})};
    Trainer trainer(small_model(), small_train(1), data);
    try {
        trainer.step();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}
