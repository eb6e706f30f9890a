#pragma once

// Human-centric evaluation: question bank schema, answer records and the
// scoring engine (answer -> question -> summary -> method).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "manifest.hpp"

namespace vsumm {

inline constexpr int kQuestionBankSchemaVersion = 1;

enum class QuestionType { Mcq, Checkbox, Linear };
enum class VideoSetKind { Original, UserSummary, MachineSummary, Pair };

inline QuestionType parse_question_type(const std::string& s) {
    if (s == "mcq") return QuestionType::Mcq;
    if (s == "checkbox") return QuestionType::Checkbox;
    if (s == "linear") return QuestionType::Linear;
    throw ValidationError("unknown question type '" + s + "' (accepted: mcq, checkbox, linear)");
}

inline std::string to_string(QuestionType t) {
    switch (t) {
        case QuestionType::Mcq: return "mcq";
        case QuestionType::Checkbox: return "checkbox";
        case QuestionType::Linear: return "linear";
    }
    return "mcq";
}

inline VideoSetKind parse_video_set_kind(const std::string& s) {
    if (s == "original") return VideoSetKind::Original;
    if (s == "user_summary") return VideoSetKind::UserSummary;
    if (s == "machine_summary") return VideoSetKind::MachineSummary;
    if (s == "pair") return VideoSetKind::Pair;
    throw ValidationError("unknown video set kind '" + s + "' (accepted: original, user_summary, machine_summary, pair)");
}

inline std::string to_string(VideoSetKind k) {
    switch (k) {
        case VideoSetKind::Original: return "original";
        case VideoSetKind::UserSummary: return "user_summary";
        case VideoSetKind::MachineSummary: return "machine_summary";
        case VideoSetKind::Pair: return "pair";
    }
    return "original";
}

/// Source name reported for user-made summaries.
inline const std::string kUserSource = "user";

struct Question {
    std::string id;
    std::string video;
    QuestionType type = QuestionType::Mcq;
    std::string prompt;
    std::vector<std::string> options;  // nominal types
    double scale = 10.0;               // linear: answers in [0, scale]
};

struct VideoSet {
    std::string id;
    VideoSetKind kind = VideoSetKind::Original;
    std::string video;
    std::string source;  // "user" or a method name; empty for originals
    std::vector<std::string> media;
    std::vector<std::string> questions;
};

struct QuestionBank {
    std::vector<VideoSet> video_sets;
    std::vector<Question> questions;

    const VideoSet* find_set(const std::string& id) const {
        for (const auto& s : video_sets)
            if (s.id == id) return &s;
        return nullptr;
    }
    const Question* find_question(const std::string& id) const {
        for (const auto& q : questions)
            if (q.id == id) return &q;
        return nullptr;
    }
};

inline QuestionBank parse_question_bank(const nlohmann::json& doc) {
    using detail::reject_unknown_keys;
    if (!doc.is_object()) throw ValidationError("question bank: document must be an object");
    reject_unknown_keys(doc, {"schema_version", "video_sets", "questions"}, "question bank");
    if (!doc.contains("schema_version") || doc.at("schema_version") != kQuestionBankSchemaVersion)
        throw ValidationError("question bank: schema_version must be " + std::to_string(kQuestionBankSchemaVersion));
    QuestionBank bank;
    try {
        for (const auto& q : doc.at("questions")) {
            reject_unknown_keys(q, {"id", "video", "type", "prompt", "options", "scale"}, "question");
            Question out;
            out.id = q.at("id").get<std::string>();
            out.video = q.at("video").get<std::string>();
            out.type = parse_question_type(q.at("type").get<std::string>());
            out.prompt = q.value("prompt", "");
            if (out.type == QuestionType::Linear) {
                out.scale = q.value("scale", 10.0);
                if (!(out.scale > 0.0)) throw ValidationError("question '" + out.id + "': scale must be positive");
                if (q.contains("options")) throw ValidationError("question '" + out.id + "': linear questions take no options");
            } else {
                out.options = q.at("options").get<std::vector<std::string>>();
                if (out.options.empty()) throw ValidationError("question '" + out.id + "': options must not be empty");
                if (std::set<std::string>(out.options.begin(), out.options.end()).size() != out.options.size())
                    throw ValidationError("question '" + out.id + "': duplicate option");
                if (q.contains("scale")) throw ValidationError("question '" + out.id + "': nominal questions take no scale");
            }
            if (bank.find_question(out.id)) throw ValidationError("duplicate question id '" + out.id + "'");
            bank.questions.push_back(std::move(out));
        }
        for (const auto& s : doc.at("video_sets")) {
            reject_unknown_keys(s, {"id", "kind", "video", "source", "media", "questions"}, "video set");
            VideoSet out;
            out.id = s.at("id").get<std::string>();
            out.kind = parse_video_set_kind(s.at("kind").get<std::string>());
            out.video = s.at("video").get<std::string>();
            out.source = s.value("source", "");
            out.media = s.value("media", std::vector<std::string>{});
            out.questions = s.at("questions").get<std::vector<std::string>>();
            if (out.kind == VideoSetKind::Original && !out.source.empty())
                throw ValidationError("video set '" + out.id + "': original sets have no source");
            if (out.kind == VideoSetKind::UserSummary) {
                if (out.source.empty()) out.source = kUserSource;
                if (out.source != kUserSource) throw ValidationError("video set '" + out.id + "': user summaries use source 'user'");
            }
            if (out.kind == VideoSetKind::MachineSummary && (out.source.empty() || out.source == kUserSource))
                throw ValidationError("video set '" + out.id + "': machine summaries need a method source");
            if (out.kind == VideoSetKind::Pair && out.source.empty())
                throw ValidationError("video set '" + out.id + "': pair sets need the summary's source");
            if (out.questions.empty()) throw ValidationError("video set '" + out.id + "': no questions");
            for (const auto& qid : out.questions) {
                const auto* q = bank.find_question(qid);
                if (!q) throw ValidationError("video set '" + out.id + "': unknown question '" + qid + "'");
                if (q->video != out.video)
                    throw ValidationError("video set '" + out.id + "': question '" + qid + "' belongs to another video");
                if (q->type == QuestionType::Linear && out.kind == VideoSetKind::Original)
                    throw ValidationError("video set '" + out.id + "': linear question '" + qid + "' on an original video");
            }
            if (bank.find_set(out.id)) throw ValidationError("duplicate video set id '" + out.id + "'");
            bank.video_sets.push_back(std::move(out));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("question bank: ") + e.what());
    }
    return bank;
}

inline QuestionBank load_question_bank(const std::string& text) {
    try {
        return parse_question_bank(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("question bank: malformed document: ") + e.what());
    }
}

inline nlohmann::json to_json(const Question& q) {
    nlohmann::json j = {{"id", q.id}, {"video", q.video}, {"type", to_string(q.type)}, {"prompt", q.prompt}};
    if (q.type == QuestionType::Linear)
        j["scale"] = q.scale;
    else
        j["options"] = q.options;
    return j;
}

inline nlohmann::json to_json(const VideoSet& s) {
    nlohmann::json j = {{"id", s.id}, {"kind", to_string(s.kind)}, {"video", s.video}, {"media", s.media}, {"questions", s.questions}};
    if (!s.source.empty()) j["source"] = s.source;
    return j;
}

inline nlohmann::json to_json(const QuestionBank& bank) {
    nlohmann::json sets = nlohmann::json::array(), questions = nlohmann::json::array();
    for (const auto& s : bank.video_sets) sets.push_back(to_json(s));
    for (const auto& q : bank.questions) questions.push_back(to_json(q));
    return {{"schema_version", kQuestionBankSchemaVersion}, {"video_sets", sets}, {"questions", questions}};
}

/// One answer; which member is meaningful depends on the question type.
struct Answer {
    std::string choice;                // mcq
    std::vector<std::string> choices;  // checkbox, sorted unique
    double rating = 0.0;               // linear
};

/// Checks a JSON payload against the question and converts it.
inline Answer parse_answer(const Question& q, const nlohmann::json& payload) {
    auto fail = [&q](const std::string& why) { throw ValidationError("question '" + q.id + "': " + why); };
    auto in_options = [&q](const std::string& o) { return std::find(q.options.begin(), q.options.end(), o) != q.options.end(); };
    Answer a;
    switch (q.type) {
        case QuestionType::Mcq:
            if (!payload.is_string()) fail("mcq answer must be a single option");
            a.choice = payload.get<std::string>();
            if (!in_options(a.choice)) fail("option '" + a.choice + "' is not offered");
            break;
        case QuestionType::Checkbox: {
            if (!payload.is_array()) fail("checkbox answer must be a list of options");
            std::set<std::string> picked;
            for (const auto& o : payload) {
                if (!o.is_string()) fail("checkbox options must be strings");
                if (!in_options(o.get<std::string>())) fail("option '" + o.get<std::string>() + "' is not offered");
                picked.insert(o.get<std::string>());
            }
            if (picked.empty()) fail("checkbox answer must not be empty");
            a.choices.assign(picked.begin(), picked.end());
            break;
        }
        case QuestionType::Linear:
            if (!payload.is_number()) fail("linear answer must be a number");
            a.rating = payload.get<double>();
            if (!(a.rating >= 0.0 && a.rating <= q.scale))
                fail("rating " + nlohmann::json(a.rating).dump() + " outside [0, " + nlohmann::json(q.scale).dump() + "]");
            break;
    }
    return a;
}

inline nlohmann::json answer_to_json(const Question& q, const Answer& a) {
    switch (q.type) {
        case QuestionType::Mcq: return a.choice;
        case QuestionType::Checkbox: return a.choices;
        case QuestionType::Linear: return a.rating;
    }
    return nullptr;
}

// ---- pairwise and aggregate scores -------------------------------------------

inline double mcq_score(const std::string& answer, const std::string& truth, const std::vector<std::string>& options) {
    for (const auto* a : {&answer, &truth})
        if (std::find(options.begin(), options.end(), *a) == options.end())
            throw ValidationError("mcq: option '" + *a + "' is not offered");
    return answer == truth ? 1.0 : 0.0;
}

/// Intersection over union of two non-empty option sets.
inline double checkbox_score(const std::vector<std::string>& answer, const std::vector<std::string>& truth) {
    const std::set<std::string> a(answer.begin(), answer.end()), b(truth.begin(), truth.end());
    if (a.empty() || b.empty()) throw ValidationError("checkbox: empty answer set");
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline double pair_score(const Question& q, const Answer& summary, const Answer& original) {
    if (q.type == QuestionType::Mcq) return mcq_score(summary.choice, original.choice, q.options);
    if (q.type == QuestionType::Checkbox) return checkbox_score(summary.choices, original.choices);
    throw ValidationError("question '" + q.id + "': linear questions have no pairwise score");
}

/// Mean over summary answers of the best match against any original answer.
inline double nominal_question_score(const Question& q, const std::vector<Answer>& summary, const std::vector<Answer>& original) {
    if (summary.empty()) throw ValidationError("question '" + q.id + "': no summary answers");
    if (original.empty()) throw ValidationError("question '" + q.id + "': no original answers");
    double sum = 0.0;
    for (const auto& s : summary) {
        double best = 0.0;
        for (const auto& o : original) best = std::max(best, pair_score(q, s, o));
        sum += best;
    }
    return sum / static_cast<double>(summary.size());
}

inline double linear_question_score(const std::vector<double>& ratings, double scale) {
    if (ratings.empty()) throw ValidationError("linear: no ratings");
    if (!(scale > 0.0)) throw ValidationError("linear: scale must be positive");
    double sum = 0.0;
    for (double r : ratings) {
        if (!(r >= 0.0 && r <= scale)) throw ValidationError("linear: rating outside [0, scale]");
        sum += r;
    }
    return sum / static_cast<double>(ratings.size()) / scale;
}

inline double mean_score(const std::vector<double>& scores, const char* what) {
    if (scores.empty()) throw ValidationError(std::string(what) + ": nothing to average");
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

/// U_i: mean of a summary's question scores.
inline double summary_score(const std::vector<double>& question_scores) { return mean_score(question_scores, "summary score"); }
/// U: mean of a method's summary scores.
inline double method_score(const std::vector<double>& summary_scores) { return mean_score(summary_scores, "method score"); }

// ---- answer records and report ---------------------------------------------

struct AnswerRecord {
    std::uint64_t seq = 0;
    std::string participant;  // random hex token, no personal data
    std::string video_set;
    std::string question;
    nlohmann::json answer;
    std::int64_t timestamp = 0;  // unix seconds
};

inline nlohmann::json to_json(const AnswerRecord& r) {
    return {{"seq", r.seq}, {"participant", r.participant}, {"video_set", r.video_set},
            {"question", r.question}, {"answer", r.answer}, {"timestamp", r.timestamp}};
}

inline AnswerRecord parse_answer_record(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"seq", "participant", "video_set", "question", "answer", "timestamp"}, "answer record");
    try {
        AnswerRecord r;
        r.seq = j.at("seq").get<std::uint64_t>();
        r.participant = j.at("participant").get<std::string>();
        r.video_set = j.at("video_set").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.answer = j.at("answer");
        r.timestamp = j.at("timestamp").get<std::int64_t>();
        for (char c : r.participant)
            if (!std::isxdigit(static_cast<unsigned char>(c))) throw ValidationError("answer record: participant id must be hex");
        if (r.participant.empty()) throw ValidationError("answer record: empty participant id");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("answer record: ") + e.what());
    }
}

/// Latest record per (participant, video set, question), each validated against the bank.
inline std::vector<std::pair<AnswerRecord, Answer>> resolve_records(const QuestionBank& bank, const std::vector<AnswerRecord>& records) {
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> latest;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto* set = bank.find_set(r.video_set);
        if (!set) throw ValidationError("answer record " + std::to_string(r.seq) + ": unknown video set '" + r.video_set + "'");
        if (std::find(set->questions.begin(), set->questions.end(), r.question) == set->questions.end())
            throw ValidationError("answer record " + std::to_string(r.seq) + ": question '" + r.question + "' not in set '" + r.video_set + "'");
        parse_answer(*bank.find_question(r.question), r.answer);
        latest[{r.participant, r.video_set, r.question}] = i;  // later position supersedes
    }
    std::vector<std::size_t> keep;
    for (const auto& [key, i] : latest) keep.push_back(i);
    std::sort(keep.begin(), keep.end());
    std::vector<std::pair<AnswerRecord, Answer>> out;
    for (std::size_t i : keep) out.emplace_back(records[i], parse_answer(*bank.find_question(records[i].question), records[i].answer));
    return out;
}

struct SummaryReport {
    std::map<std::string, double> questions;  // question id -> A
    std::optional<double> mcq, checkbox, linear;  // per-type means; linear in [0, 1]
    std::optional<double> overall;  // U_i
};

struct HumanEvalReport {
    // video -> source -> scores
    std::map<std::string, std::map<std::string, SummaryReport>> videos;
    std::map<std::string, double> methods;  // source -> U
    std::vector<std::string> skipped;      // unscorable (summary, question) notes
    std::size_t records = 0;
};

inline HumanEvalReport score_answers(const QuestionBank& bank, const std::vector<AnswerRecord>& records) {
    const auto resolved = resolve_records(bank, records);
    HumanEvalReport rep;
    rep.records = resolved.size();

    // (video, question) -> original answers; (video, source, question) -> summary answers.
    std::map<std::pair<std::string, std::string>, std::vector<Answer>> originals;
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<Answer>> summaries;
    for (const auto& [rec, ans] : resolved) {
        const auto* set = bank.find_set(rec.video_set);
        if (set->kind == VideoSetKind::Original)
            originals[{set->video, rec.question}].push_back(ans);
        else
            summaries[{set->video, set->source, rec.question}].push_back(ans);
    }

    for (const auto& [key, answers] : summaries) {
        const auto& [video, source, qid] = key;
        const auto* q = bank.find_question(qid);
        auto& summary = rep.videos[video][source];
        if (q->type == QuestionType::Linear) {
            std::vector<double> ratings;
            for (const auto& a : answers) ratings.push_back(a.rating);
            summary.questions[qid] = linear_question_score(ratings, q->scale);
        } else {
            const auto it = originals.find({video, qid});
            if (it == originals.end()) {
                rep.skipped.push_back(video + "/" + source + "/" + qid + ": no answers on the original video");
                continue;
            }
            summary.questions[qid] = nominal_question_score(*q, answers, it->second);
        }
    }

    std::map<std::string, std::vector<double>> per_source;
    for (auto& [video, sources] : rep.videos)
        for (auto& [source, summary] : sources) {
            std::map<QuestionType, std::vector<double>> by_type;
            std::vector<double> all;
            for (const auto& [qid, a] : summary.questions) {
                by_type[bank.find_question(qid)->type].push_back(a);
                all.push_back(a);
            }
            if (by_type.count(QuestionType::Mcq)) summary.mcq = mean_score(by_type[QuestionType::Mcq], "mcq");
            if (by_type.count(QuestionType::Checkbox)) summary.checkbox = mean_score(by_type[QuestionType::Checkbox], "checkbox");
            if (by_type.count(QuestionType::Linear)) summary.linear = mean_score(by_type[QuestionType::Linear], "linear");
            if (!all.empty()) {
                summary.overall = summary_score(all);
                per_source[source].push_back(*summary.overall);
            }
        }
    for (const auto& [source, scores] : per_source) rep.methods[source] = method_score(scores);
    return rep;
}

inline nlohmann::json to_json(const HumanEvalReport& rep, double display_scale = 10.0) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json videos = nlohmann::json::object();
    for (const auto& [video, sources] : rep.videos) {
        nlohmann::json js = nlohmann::json::object();
        for (const auto& [source, s] : sources)
            js[source] = {{"questions", s.questions},
                          {"mcq", opt(s.mcq)},
                          {"checkbox", opt(s.checkbox)},
                          {"linear", opt(s.linear)},
                          {"linear_display", s.linear ? nlohmann::json(*s.linear * display_scale) : nlohmann::json(nullptr)},
                          {"summary_score", opt(s.overall)}};
        videos[video] = js;
    }
    return {{"videos", videos}, {"methods", rep.methods}, {"skipped", rep.skipped}, {"records", rep.records},
            {"display_scale", display_scale}};
}

}  // namespace vsumm
