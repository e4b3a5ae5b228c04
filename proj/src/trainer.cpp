// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "s3kit/error.hpp"
#include "s3kit/ops.hpp"
#include "s3kit/rng.hpp"
#include "s3kit/serialize.hpp"
#include "s3kit/util.hpp"

namespace s3kit {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', '3', 'C', 'K'};
constexpr std::uint64_t kEpochStreamBase = 0x45504F4300000000ULL;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& v) {
    U out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ParseError(key, "expected a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(key, "expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');)
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::string_view aggregation_name(Aggregation a) { return a == Aggregation::mean_pool ? "mean_pool" : "flatten_fixed"; }
std::string_view scope_name(LossScope s) { return s == LossScope::bot_responses ? "bot_responses" : "all_tokens"; }

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
    Setter set;
    Getter get;
};

#define S3_UNSIGNED(member)                                                                                    \
    Field {                                                                                                    \
        [](RunConfig& c, const std::string& k, const std::string& v) {                                       \
            c.member = parse_unsigned<std::remove_reference_t<decltype(c.member)>>(k, v);                     \
        },                                                                                                     \
            [](const RunConfig& c) { return std::to_string(c.member); }                                       \
    }
#define S3_DOUBLE(member)                                                                                      \
    Field {                                                                                                    \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_double(k, v); },      \
            [](const RunConfig& c) { return format_double(c.member); }                                        \
    }
#define S3_BOOL(member)                                                                                        \
    Field {                                                                                                    \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); },        \
            [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }                       \
    }
#define S3_STRING(member)                                                                                      \
    Field {                                                                                                    \
        [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; },                         \
            [](const RunConfig& c) { return c.member; }                                                       \
    }

const std::vector<std::pair<std::string, Field>>& config_fields() {
    static const std::vector<std::pair<std::string, Field>> fields = {
        {"data", S3_STRING(data)},
        {"media_root", S3_STRING(media_root)},
        {"batch_size", S3_UNSIGNED(train.batch_size)},
        {"micro_batch", S3_UNSIGNED(train.micro_batch)},
        {"lr0", S3_DOUBLE(train.lr0)},
        {"lr_min", S3_DOUBLE(train.lr_min)},
        {"total_steps", S3_UNSIGNED(train.total_steps)},
        {"seed", S3_UNSIGNED(train.seed)},
        {"eval_every", S3_UNSIGNED(train.eval_every)},
        {"workers", S3_UNSIGNED(train.workers)},
        {"beta1", S3_DOUBLE(train.adamw.beta1)},
        {"beta2", S3_DOUBLE(train.adamw.beta2)},
        {"eps", S3_DOUBLE(train.adamw.eps)},
        {"weight_decay", S3_DOUBLE(train.adamw.weight_decay)},
        {"train_embed", S3_BOOL(train.groups.embed)},
        {"train_head", S3_BOOL(train.groups.head)},
        {"train_lora", S3_BOOL(train.groups.lora)},
        {"train_base", S3_BOOL(train.groups.base)},
        {"train_projector", S3_BOOL(train.train_projector)},
        {"d_enc", S3_UNSIGNED(model.d_enc)},
        {"image_grid", S3_UNSIGNED(model.image_grid)},
        {"image_seed", S3_UNSIGNED(model.image_seed)},
        {"audio_seed", S3_UNSIGNED(model.audio_seed)},
        {"n_modality_tokens", S3_UNSIGNED(model.n_modality_tokens)},
        {"d_hidden", S3_UNSIGNED(model.projector.d_hidden)},
        {"hidden_layers", S3_UNSIGNED(model.projector.hidden_layers)},
        {"fixed_rows", S3_UNSIGNED(model.projector.fixed_rows)},
        {"aggregation",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "mean_pool") c.model.projector.aggregation = Aggregation::mean_pool;
                   else if (v == "flatten_fixed") c.model.projector.aggregation = Aggregation::flatten_fixed;
                   else throw ParseError(k, "expected mean_pool or flatten_fixed, got '" + v + "'");
               },
               [](const RunConfig& c) { return std::string(aggregation_name(c.model.projector.aggregation)); }}},
        {"d_model", S3_UNSIGNED(model.lm.d_model)},
        {"n_layers", S3_UNSIGNED(model.lm.n_layers)},
        {"n_heads", S3_UNSIGNED(model.lm.n_heads)},
        {"d_ff", S3_UNSIGNED(model.lm.d_ff)},
        {"max_seq_len", S3_UNSIGNED(model.lm.max_seq_len)},
        {"lora_rank", S3_UNSIGNED(model.lora.rank)},
        {"lora_alpha", S3_DOUBLE(model.lora.alpha)},
        {"lora_targets",
         Field{[](RunConfig& c, const std::string&, const std::string& v) { c.model.lora.targets = split_list(v); },
               [](const RunConfig& c) { return join_list(c.model.lora.targets); }}},
        {"loss_scope",
         Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "bot_responses") c.model.loss_scope = LossScope::bot_responses;
                   else if (v == "all_tokens") c.model.loss_scope = LossScope::all_tokens;
                   else throw ParseError(k, "expected bot_responses or all_tokens, got '" + v + "'");
               },
               [](const RunConfig& c) { return std::string(scope_name(c.model.loss_scope)); }}},
    };
    return fields;
}

#undef S3_UNSIGNED
#undef S3_DOUBLE
#undef S3_BOOL
#undef S3_STRING

json config_to_json(const RunConfig& c) {
    json j = json::object();
    for (const auto& [key, field] : config_fields())
        if (key != "data" && key != "media_root") j[key] = field.get(c);
    return j;
}

RunConfig config_from_json(const json& j) {
    RunConfig c;
    const auto& fields = config_fields();
    for (const auto& [key, value] : j.items()) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
        if (it == fields.end()) throw ParseError(key, "unknown configuration key");
        if (!value.is_string()) throw ParseError(key, "expected a string value");
        it->second.set(c, key, value.get<std::string>());
    }
    return c;
}

std::map<std::string, Tensor<float>> by_name(const std::vector<NamedTensor<float>>& tensors) {
    std::map<std::string, Tensor<float>> out;
    for (const auto& t : tensors) out[t.name] = t.tensor;
    return out;
}

AdamW<float> make_optimizer(MultimodalModel& model, const TrainConfig& config) {
    model.set_trainable(config.groups, config.train_projector);
    return AdamW<float>(model.trainable_parameters(), config.adamw);
}

std::size_t count_targets(const MultimodalModel& model, const PreparedDialog& p) {
    const auto mask = make_loss_mask(p.tokens.ids, model.config().loss_scope);
    std::size_t n = 0;
    for (std::size_t t = 1; t < mask.size(); ++t) n += mask[t] ? 1 : 0;
    return n;
}

} // namespace

void TrainConfig::validate() const {
    if (micro_batch == 0 || batch_size == 0) throw usage_error("batch_size and micro_batch must be positive");
    if (batch_size % micro_batch != 0) {
        throw usage_error("batch_size " + std::to_string(batch_size) + " is not a multiple of micro_batch " +
                          std::to_string(micro_batch));
    }
    if (!(lr0 > 0.0)) throw usage_error("lr0 must be positive");
    if (lr_min < 0.0 || lr_min > lr0) throw usage_error("lr_min must lie in [0, lr0]");
    if (workers == 0) throw usage_error("workers must be at least 1");
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
    RunConfig c;
    const auto& fields = config_fields();
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError("line " + std::to_string(line_no), "expected key = value");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == key; });
        if (it == fields.end()) throw ParseError(key, "unknown configuration key");
        it->second.set(c, key, value);
    }
    if (!c.data.empty() && std::filesystem::path(c.data).is_relative() && !base_dir.empty())
        c.data = (base_dir / c.data).string();
    if (!c.media_root.empty() && std::filesystem::path(c.media_root).is_relative() && !base_dir.empty())
        c.media_root = (base_dir / c.media_root).string();
    if (c.media_root.empty() && !c.data.empty()) c.media_root = std::filesystem::path(c.data).parent_path().string();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file(path), path.parent_path());
}

std::string serialize_run_config(const RunConfig& config) {
    std::string out;
    for (const auto& [key, field] : config_fields()) {
        const std::string v = field.get(config);
        if ((key == "data" || key == "media_root") && v.empty()) continue;
        out += key + " = " + v + "\n";
    }
    return out;
}

std::string encode_checkpoint(const Checkpoint& ck) {
    RunConfig rc{ck.model, ck.train, {}, {}};
    json manifest;
    manifest["vocabulary"] = ck.vocabulary;
    manifest["config"] = config_to_json(rc);
    manifest["step"] = ck.step;
    manifest["optimizer_steps"] = ck.optimizer_steps;
    manifest["rng"] = {{"seed", ck.rng_seed}, {"step", ck.step}};
    manifest["loss_history"] = ck.loss_history;
    const std::string text = manifest.dump();

    std::vector<NamedTensor<float>> all = ck.tensors;
    for (const auto& t : ck.first_moments) all.push_back({"opt.m." + t.name, t.tensor});
    for (const auto& t : ck.second_moments) all.push_back({"opt.v." + t.name, t.tensor});

    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    write_u32(out, ck.version);
    write_u32(out, static_cast<std::uint32_t>(text.size()));
    write_bytes(out, text);
    write_named_tensors(out, all);
    return out.str();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    const std::string magic = read_bytes(in, 4, "checkpoint magic");
    if (magic != std::string(kMagic, 4)) throw data_error("not a checkpoint: bad magic");
    Checkpoint ck;
    ck.version = read_u32(in, "checkpoint version");
    if (ck.version != kCheckpointVersion) {
        throw data_error("checkpoint version " + std::to_string(ck.version) + " is not supported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    const std::uint32_t len = read_u32(in, "checkpoint manifest length");
    if (len > bytes.size()) throw data_error("corrupt checkpoint: manifest length exceeds file size");
    const std::string text = read_bytes(in, len, "checkpoint manifest");
    json manifest;
    try {
        manifest = json::parse(text);
        ck.vocabulary = manifest.at("vocabulary").get<std::vector<std::string>>();
        const RunConfig rc = config_from_json(manifest.at("config"));
        ck.model = rc.model;
        ck.train = rc.train;
        ck.step = manifest.at("step").get<std::uint64_t>();
        ck.optimizer_steps = manifest.at("optimizer_steps").get<std::uint64_t>();
        ck.rng_seed = manifest.at("rng").at("seed").get<std::uint64_t>();
        ck.loss_history = manifest.at("loss_history").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw data_error(std::string("corrupt checkpoint manifest: ") + e.what());
    }
    for (auto& t : read_named_tensors(in)) {
        if (t.name.starts_with("opt.m.")) ck.first_moments.push_back({t.name.substr(6), t.tensor});
        else if (t.name.starts_with("opt.v.")) ck.second_moments.push_back({t.name.substr(6), t.tensor});
        else ck.tensors.push_back(std::move(t));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw data_error("corrupt checkpoint: trailing bytes");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

MultimodalModel restore_model(const Checkpoint& ck) {
    std::vector<std::string> expected;
    for (auto s : Vocabulary::kSurface) expected.emplace_back(s);
    if (ck.vocabulary != expected) throw data_error("checkpoint vocabulary does not match this build");
    auto model = MultimodalModel::create(ck.model, ck.train.seed);
    model.load_tensors(ck.tensors);
    return model;
}

std::vector<PreparedDialog> prepare_all(const MultimodalModel& model, const std::vector<Dialog>& dialogs,
                                        const std::filesystem::path& media_root, std::size_t workers) {
    std::vector<PreparedDialog> out(dialogs.size());
    parallel_for(dialogs.size(), workers, [&](std::size_t i) { out[i] = model.prepare(dialogs[i], media_root); });
    return out;
}

Trainer::Trainer(ModelConfig model_config, TrainConfig config, std::vector<PreparedDialog> data)
    : Trainer(MultimodalModel::create(std::move(model_config), config.seed), config, std::move(data)) {}

Trainer::Trainer(MultimodalModel model, TrainConfig config, std::vector<PreparedDialog> data)
    : model_(std::move(model)),
      config_(config),
      data_(std::move(data)),
      optimizer_(make_optimizer(model_, config_)) {
    config_.validate();
    if (data_.empty()) throw data_error("training mixture is empty");
    valid_targets_.reserve(data_.size());
    for (const auto& p : data_) valid_targets_.push_back(count_targets(model_, p));
}

Trainer Trainer::resume(const Checkpoint& ck, std::vector<PreparedDialog> data) {
    Trainer t(restore_model(ck), ck.train, std::move(data));
    const auto m = by_name(ck.first_moments), v = by_name(ck.second_moments);
    const auto& params = t.optimizer_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto mi = m.find(params[i].name), vi = v.find(params[i].name);
        if (mi == m.end() || vi == v.end()) throw data_error("checkpoint lacks optimizer state for '" + params[i].name + "'");
        if (mi->second.size() != params[i].tensor.size() || vi->second.size() != params[i].tensor.size())
            throw data_error("optimizer state for '" + params[i].name + "' has the wrong size");
        t.optimizer_.first_moments()[i].assign(mi->second.data().begin(), mi->second.data().end());
        t.optimizer_.second_moments()[i].assign(vi->second.data().begin(), vi->second.data().end());
    }
    if (m.size() != params.size()) throw data_error("checkpoint optimizer state does not match the trainable set");
    t.optimizer_.set_steps(ck.optimizer_steps);
    t.step_ = ck.step;
    t.history_ = ck.loss_history;
    return t;
}

const std::vector<std::size_t>& Trainer::epoch_order(std::uint64_t epoch) const {
    if (cached_epoch_ != epoch) {
        cached_order_.resize(data_.size());
        std::iota(cached_order_.begin(), cached_order_.end(), std::size_t{0});
        RngStream rng(config_.seed, kEpochStreamBase + epoch);
        rng.shuffle(std::span<std::size_t>(cached_order_));
        cached_epoch_ = epoch;
    }
    return cached_order_;
}

std::vector<std::size_t> Trainer::batch_indices(std::uint64_t step) const {
    const std::uint64_t n = data_.size();
    std::vector<std::size_t> out;
    out.reserve(config_.batch_size);
    for (std::size_t j = 0; j < config_.batch_size; ++j) {
        const std::uint64_t global = step * config_.batch_size + j;
        out.push_back(epoch_order(global / n)[global % n]);
    }
    return out;
}

double Trainer::scheduled_lr() const {
    return cosine_lr(std::min(step_, config_.total_steps), std::max<std::uint64_t>(config_.total_steps, 1),
                     config_.lr0, config_.lr_min);
}

double Trainer::step() {
    if (config_.total_steps > 0 && step_ >= config_.total_steps) {
        throw usage_error("training already reached total_steps " + std::to_string(config_.total_steps));
    }
    return step_with_lr(cosine_lr(step_, std::max<std::uint64_t>(config_.total_steps, 1), config_.lr0, config_.lr_min));
}

double Trainer::step_with_lr(double lr) {
    const auto indices = batch_indices(step_);
    std::size_t total = 0;
    for (auto i : indices) total += valid_targets_[i];
    if (total == 0) throw data_error("empty loss mask across the whole batch at step " + std::to_string(step_));

    optimizer_.zero_grad();
    // A batch without audio or images still steps those projectors, with a zero gradient.
    for (auto p : optimizer_.params()) p.tensor.mutable_grad();
    double batch_loss = 0.0;
    // Each sequence is weighted by its share of the batch's supervised tokens.
    for (std::size_t start = 0; start < indices.size(); start += config_.micro_batch) {
        const std::size_t end = std::min(indices.size(), start + config_.micro_batch);
        for (std::size_t j = start; j < end; ++j) {
            const std::size_t i = indices[j];
            if (valid_targets_[i] == 0) continue;
            const double weight = static_cast<double>(valid_targets_[i]) / static_cast<double>(total);
            Tensor<float> l = ops::scale(model_.loss(data_[i]), weight);
            batch_loss += static_cast<double>(l.item());
            l.backward();
        }
    }
    if (!std::isfinite(batch_loss)) throw numeric_error("non-finite loss at step " + std::to_string(step_));
    optimizer_.step(lr);
    history_.push_back(batch_loss);
    ++step_;
    if (config_.eval_every > 0 && step_ % config_.eval_every == 0)
        spdlog::info("step {} lr {:.3e} loss {:.6f}", step_, lr, batch_loss);
    return batch_loss;
}

void Trainer::run() {
    while (step_ < config_.total_steps) step();
}

double Trainer::evaluate(const std::vector<std::size_t>& indices) const {
    NoGradGuard no_grad;
    std::size_t total = 0;
    for (auto i : indices) total += valid_targets_.at(i);
    if (total == 0) throw data_error("evaluate: empty loss mask across the whole batch");
    double loss = 0.0;
    for (auto i : indices) {
        if (valid_targets_[i] == 0) continue;
        loss += static_cast<double>(model_.loss(data_[i]).item()) * static_cast<double>(valid_targets_[i]) /
                static_cast<double>(total);
    }
    return loss;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ck;
    for (auto s : Vocabulary::kSurface) ck.vocabulary.emplace_back(s);
    ck.model = model_.config();
    ck.train = config_;
    ck.step = step_;
    ck.optimizer_steps = optimizer_.steps();
    ck.rng_seed = config_.seed;
    ck.loss_history = history_;
    for (const auto& t : model_.named_tensors()) ck.tensors.push_back({t.name, t.tensor.detach()});
    const auto& params = optimizer_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& shape = params[i].tensor.shape();
        ck.first_moments.push_back({params[i].name, Tensor<float>(shape, optimizer_.first_moments()[i])});
        ck.second_moments.push_back({params[i].name, Tensor<float>(shape, optimizer_.second_moments()[i])});
    }
    return ck;
}

} // namespace s3kit
