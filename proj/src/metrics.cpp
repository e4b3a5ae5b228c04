// Copyright 2026 The s3kit Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3kit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "s3kit/error.hpp"
#include "s3kit/util.hpp"

namespace s3kit {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<double, kDialogTypeCount> kWeights{0.1, 0.2, 0.3, 0.4};
constexpr std::array<std::string_view, kDialogTypeCount> kTypeNames{"text", "text+image", "text+audio",
                                                                    "text+image+audio"};

// Porter stemmer over b[0..k], following the reference C implementation.
class Stemmer {
public:
    explicit Stemmer(std::string_view w) : b_(w), k_(static_cast<int>(w.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

private:
    bool cons(int i) const {
        switch (b_[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u': return false;
        case 'y': return i == 0 ? true : !cons(i - 1);
        default: return true;
        }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
        int n = 0, i = 0;
        for (;; ++i) {
            if (i > j_) return n;
            if (!cons(i)) break;
        }
        ++i;
        for (;;) {
            for (;; ++i) {
                if (i > j_) return n;
                if (cons(i)) break;
            }
            ++i;
            ++n;
            for (;; ++i) {
                if (i > j_) return n;
                if (!cons(i)) break;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool double_c(int j) const { return j >= 1 && b_[j] == b_[j - 1] && cons(j); }

    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[i];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        const int len = static_cast<int>(s.size());
        if (len > k_ + 1) return false;
        if (std::string_view(b_).substr(static_cast<std::size_t>(k_ + 1 - len), s.size()) != s) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s) {
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
        k_ = j_ + static_cast<int>(s.size());
    }

    void r(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    // Tries each (suffix, replacement) pair in order; the first suffix that
    // matches is replaced when m() > 0 and the search stops.
    void replace_first(std::initializer_list<std::pair<std::string_view, std::string_view>> rules) {
        for (const auto& [suffix, repl] : rules) {
            if (ends(suffix)) {
                r(repl);
                return;
            }
        }
    }

    void step1ab() {
        if (b_[k_] == 's') {
            if (ends("sses")) k_ -= 2;
            else if (ends("ies")) set_to("i");
            else if (b_[k_ - 1] != 's') --k_;
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) set_to("ate");
            else if (ends("bl")) set_to("ble");
            else if (ends("iz")) set_to("ize");
            else if (double_c(k_)) {
                --k_;
                const char ch = b_[k_];
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (m() == 1 && cvc(k_)) {
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
    }

    void step2() {
        switch (b_[k_ - 1]) {
        case 'a': replace_first({{"ational", "ate"}, {"tional", "tion"}}); break;
        case 'c': replace_first({{"enci", "ence"}, {"anci", "ance"}}); break;
        case 'e': replace_first({{"izer", "ize"}}); break;
        case 'l': replace_first({{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}}); break;
        case 'o': replace_first({{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}); break;
        case 's': replace_first({{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}}); break;
        case 't': replace_first({{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}); break;
        case 'g': replace_first({{"logi", "log"}}); break;
        default: break;
        }
    }

    void step3() {
        switch (b_[k_]) {
        case 'e': replace_first({{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}); break;
        case 'i': replace_first({{"iciti", "ic"}}); break;
        case 'l': replace_first({{"ical", "ic"}, {"ful", ""}}); break;
        case 's': replace_first({{"ness", ""}}); break;
        default: break;
        }
    }

    void step4() {
        auto any = [&](std::initializer_list<std::string_view> suffixes) {
            for (auto s : suffixes)
                if (ends(s)) return true;
            return false;
        };
        bool hit = false;
        switch (b_[k_ - 1]) {
        case 'a': hit = any({"al"}); break;
        case 'c': hit = any({"ance", "ence"}); break;
        case 'e': hit = any({"er"}); break;
        case 'i': hit = any({"ic"}); break;
        case 'l': hit = any({"able", "ible"}); break;
        case 'n': hit = any({"ant", "ement", "ment", "ent"}); break;
        case 'o':
            hit = (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't')) || ends("ou");
            break;
        case 's': hit = any({"ism"}); break;
        case 't': hit = any({"ate", "iti"}); break;
        case 'u': hit = any({"ous"}); break;
        case 'v': hit = any({"ive"}); break;
        case 'z': hit = any({"ize"}); break;
        default: break;
        }
        if (hit && m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[k_] == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[k_] == 'l' && double_c(k_) && m() > 1) --k_;
    }

    std::string b_;
    int k_;
    int j_ = 0;
};

struct Alignment {
    std::size_t hyp;
    std::size_t ref;
};

// One matching stage over still-unaligned tokens, keyed by `key`.
void align_stage(const std::vector<std::string>& hyp_keys, const std::vector<std::string>& ref_keys,
                 std::vector<long>& hyp_to_ref, std::vector<bool>& ref_used) {
    for (std::size_t i = 0; i < hyp_keys.size(); ++i) {
        if (hyp_to_ref[i] >= 0) continue;
        long last = -1;
        for (std::size_t p = i; p-- > 0;) {
            if (hyp_to_ref[p] >= 0) {
                last = hyp_to_ref[p];
                break;
            }
        }
        long best = -1;
        for (std::size_t j = 0; j < ref_keys.size(); ++j) {
            if (ref_used[j] || ref_keys[j] != hyp_keys[i]) continue;
            const long jj = static_cast<long>(j);
            if (jj == last + 1) {
                best = jj;
                break;
            }
            if (best < 0 || (best <= last && jj > last)) best = jj;
        }
        if (best >= 0) {
            hyp_to_ref[i] = best;
            ref_used[static_cast<std::size_t>(best)] = true;
        }
    }
}

} // namespace

double type_weight(DialogType type) { return kWeights.at(static_cast<std::size_t>(type)); }

std::string_view to_string(DialogType type) { return kTypeNames.at(static_cast<std::size_t>(type)); }

DialogType parse_dialog_type(std::string_view name) {
    for (std::size_t i = 0; i < kDialogTypeCount; ++i)
        if (kTypeNames[i] == name) return static_cast<DialogType>(i);
    throw ParseError("type", "unknown dialog type '" + std::string(name) + "'");
}

DialogType classify_dialog(const Dialog& dialog) {
    bool image = false, audio = false;
    for (const auto& m : dialog.messages) {
        image = image || m.kind == MessageKind::image;
        audio = audio || m.kind == MessageKind::audio;
    }
    if (image && audio) return DialogType::all_three;
    if (image) return DialogType::text_image;
    if (audio) return DialogType::text_audio;
    return DialogType::text;
}

double hidden_metric(std::span<const double> log_probs) {
    if (log_probs.empty()) throw data_error("hidden metric needs at least one token");
    double sum = 0.0;
    for (std::size_t i = 0; i < log_probs.size(); ++i) {
        const double lp = log_probs[i];
        if (std::isnan(lp) || lp > 0.0) {
            throw data_error(fmt::format("log-probability {} at token {} is not <= 0", lp, i));
        }
        sum += lp;
    }
    return std::exp(sum / static_cast<double>(log_probs.size()));
}

std::string porter_stem(std::string_view word) { return Stemmer(word).run(); }

std::vector<std::string> meteor_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else if (!std::ispunct(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

MeteorDetail meteor_detail(std::string_view hypothesis, std::string_view reference) {
    const auto hyp = meteor_tokens(hypothesis);
    const auto ref = meteor_tokens(reference);
    if (ref.empty()) throw data_error("METEOR reference is empty after normalization");
    MeteorDetail d;
    if (hyp.empty()) return d;

    std::vector<long> hyp_to_ref(hyp.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    align_stage(hyp, ref, hyp_to_ref, ref_used);
    std::vector<std::string> hyp_stems, ref_stems;
    for (const auto& w : hyp) hyp_stems.push_back(porter_stem(w));
    for (const auto& w : ref) ref_stems.push_back(porter_stem(w));
    align_stage(hyp_stems, ref_stems, hyp_to_ref, ref_used);

    long prev = -2;
    bool in_chunk = false;
    for (long r : hyp_to_ref) {
        if (r < 0) {
            in_chunk = false;
            continue;
        }
        ++d.matches;
        if (!in_chunk || r != prev + 1) ++d.chunks;
        in_chunk = true;
        prev = r;
    }
    if (d.matches == 0) return d;
    const double m = static_cast<double>(d.matches);
    d.precision = m / static_cast<double>(hyp.size());
    d.recall = m / static_cast<double>(ref.size());
    d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
    const double frag = static_cast<double>(d.chunks) / m;
    d.penalty = 0.5 * frag * frag * frag;
    d.score = d.fmean * (1.0 - d.penalty);
    return d;
}

double meteor(std::string_view hypothesis, std::string_view reference) {
    return meteor_detail(hypothesis, reference).score;
}

EvalReport integral_metric(std::span<const DialogScore> scores) {
    if (scores.empty()) throw usage_error("integral metric needs at least one scored dialog");
    EvalReport r;
    std::array<double, kDialogTypeCount> sum_c{}, sum_m{}, sum_h{};
    for (const auto& s : scores) {
        const auto j = static_cast<std::size_t>(s.type);
        if (j >= kDialogTypeCount) throw usage_error("dialog type without a weight");
        ++r.counts[j];
        sum_c[j] += (s.meteor + s.hm) / 2.0;
        sum_m[j] += s.meteor;
        sum_h[j] += s.hm;
    }
    for (std::size_t j = 0; j < kDialogTypeCount; ++j) {
        if (r.counts[j] == 0) continue;
        const double n = static_cast<double>(r.counts[j]);
        ++r.types_present;
        r.mean_combined[j] = sum_c[j] / n;
        r.mean_meteor[j] = sum_m[j] / n;
        r.mean_hm[j] = sum_h[j] / n;
        r.integral += kWeights[j] / n * sum_c[j];
    }
    return r;
}

std::optional<char> extract_option_letter(std::string_view text) {
    auto left_ok = [&](std::size_t i) {
        if (i == 0) return true;
        const auto c = static_cast<unsigned char>(text[i - 1]);
        return std::isspace(c) || c == '(';
    };
    auto right_ok = [&](std::size_t i) {
        if (i + 1 >= text.size()) return true;
        const auto c = static_cast<unsigned char>(text[i + 1]);
        return std::isspace(c) || c == ')' || c == '.' || c == ':';
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c >= 'A' && c <= 'J' && left_ok(i) && right_ok(i)) return c;
    }
    return std::nullopt;
}

MmmuReport mmmu_accuracy(std::span<const MmmuPrediction> predictions) {
    MmmuReport r;
    std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
    for (const auto& p : predictions) {
        if (p.gold < 'A' || p.gold > 'J') throw usage_error(fmt::format("gold option '{}' is outside A-J", p.gold));
        const auto got = extract_option_letter(p.generated);
        const bool ok = got && *got == p.gold;
        ++r.total;
        r.correct += ok ? 1 : 0;
        auto& t = tally[p.discipline];
        ++t.first;
        t.second += ok ? 1 : 0;
    }
    if (r.total > 0) r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
    for (const auto& [name, t] : tally) {
        const double acc = static_cast<double>(t.second) / static_cast<double>(t.first);
        r.per_discipline[name] = acc;
        r.discipline_mean += acc;
    }
    if (!tally.empty()) r.discipline_mean /= static_cast<double>(tally.size());
    return r;
}

std::string serialize_prediction(const PredictionRecord& record) {
    json j;
    j["id"] = record.id;
    j["type"] = std::string(to_string(record.type));
    j["hypothesis"] = record.hypothesis;
    j["reference"] = record.reference;
    j["log_probs"] = record.log_probs;
    // Generated bytes need not be valid UTF-8.
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

PredictionRecord parse_prediction(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError("record", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("record", "expected a JSON object");
    PredictionRecord r;
    auto field = [&](const char* key) -> const json& {
        auto it = j.find(key);
        if (it == j.end()) throw ParseError(key, "missing");
        return *it;
    };
    if (!field("id").is_number_unsigned()) throw ParseError("id", "expected a non-negative integer");
    r.id = field("id").get<std::uint64_t>();
    if (!field("type").is_string()) throw ParseError("type", "expected a string");
    r.type = parse_dialog_type(field("type").get<std::string>());
    if (!field("hypothesis").is_string()) throw ParseError("hypothesis", "expected a string");
    r.hypothesis = field("hypothesis").get<std::string>();
    if (!field("reference").is_string()) throw ParseError("reference", "expected a string");
    r.reference = field("reference").get<std::string>();
    const json& lp = field("log_probs");
    if (!lp.is_array()) throw ParseError("log_probs", "expected an array");
    for (const auto& v : lp) {
        if (!v.is_number()) throw ParseError("log_probs", "expected numbers");
        r.log_probs.push_back(v.get<double>());
    }
    return r;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<PredictionRecord> out;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_prediction(line));
        } catch (const ParseError& e) {
            throw ParseError(e.field(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
    std::string out;
    for (const auto& r : records) out += serialize_prediction(r) + "\n";
    write_file(path, out);
}

std::vector<DialogScore> score_predictions(std::span<const PredictionRecord> records) {
    std::vector<DialogScore> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.type, meteor(r.hypothesis, r.reference), hidden_metric(r.log_probs)});
    return out;
}

std::string report_json(const EvalReport& report) {
    json j;
    j["integral"] = report.integral;
    j["types_present"] = report.types_present;
    json types = json::array();
    for (std::size_t t = 0; t < kDialogTypeCount; ++t) {
        types.push_back({{"type", std::string(kTypeNames[t])},
                         {"weight", kWeights[t]},
                         {"count", report.counts[t]},
                         {"meteor", report.mean_meteor[t]},
                         {"hm", report.mean_hm[t]},
                         {"combined", report.mean_combined[t]}});
    }
    j["per_type"] = types;
    return j.dump(2);
}

std::string report_table(const EvalReport& report) {
    std::string out = fmt::format("{:<18} {:>6} {:>6} {:>8} {:>8} {:>9}\n", "type", "weight", "count", "meteor", "hm",
                                  "combined");
    for (std::size_t t = 0; t < kDialogTypeCount; ++t) {
        out += fmt::format("{:<18} {:>6.1f} {:>6} {:>8.4f} {:>8.4f} {:>9.4f}\n", kTypeNames[t], kWeights[t],
                           report.counts[t], report.mean_meteor[t], report.mean_hm[t], report.mean_combined[t]);
    }
    out += fmt::format("integral metric: {:.6f}\n", report.integral);
    return out;
}

} // namespace s3kit
