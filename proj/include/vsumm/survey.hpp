#pragma once

// Survey sessions over a question bank, persisted to an append-only JSONL
// answer log. Transport-agnostic; see survey_http.hpp for the HTTP binding.

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "human_eval.hpp"

namespace vsumm {

/// Unknown session or set.
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Request is valid but not allowed in the current state (out-of-order access, empty log).
class StateError : public Error {
public:
    using Error::Error;
};

inline std::vector<AnswerRecord> parse_answer_log(const std::string& text) {
    std::vector<AnswerRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        try {
            out.push_back(parse_answer_record(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("answer log line " + std::to_string(number) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("answer log line " + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read '" + path + "'");
    return ss.str();
}

/**
 * Append-only newline-delimited answer log. One writer at a time; every
 * append is a single write followed by fsync. Snapshots read the prefix that
 * was committed when the snapshot started.
 */
class AnswerLog {
public:
    explicit AnswerLog(std::string path) : path_(std::move(path)) {
        fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd_ < 0) throw IoError("cannot open answer log '" + path_ + "': " + std::strerror(errno));
        const std::string existing = read_text_file(path_);
        if (!existing.empty() && existing.back() != '\n') throw ValidationError("answer log '" + path_ + "' ends with a partial record");
        for (const auto& r : parse_answer_log(existing)) next_seq_ = std::max(next_seq_, r.seq + 1);
        committed_ = existing.size();
    }
    AnswerLog(const AnswerLog&) = delete;
    AnswerLog& operator=(const AnswerLog&) = delete;
    ~AnswerLog() {
        if (fd_ >= 0) ::close(fd_);
    }

    /// Assigns sequence numbers, writes and syncs. Returns the records as stored.
    std::vector<AnswerRecord> append(std::vector<AnswerRecord> records) {
        std::lock_guard lock(mutex_);
        std::string blob;
        for (auto& r : records) {
            r.seq = next_seq_++;
            blob += to_json(r).dump() + "\n";
        }
        std::size_t written = 0;
        while (written < blob.size()) {
            const ssize_t n = ::write(fd_, blob.data() + written, blob.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError("answer log write failed: " + std::string(std::strerror(errno)));
            }
            written += static_cast<std::size_t>(n);
        }
        if (::fsync(fd_) != 0) throw IoError("answer log fsync failed: " + std::string(std::strerror(errno)));
        committed_ += blob.size();
        return records;
    }

    std::vector<AnswerRecord> snapshot() const {
        std::size_t size;
        {
            std::lock_guard lock(mutex_);
            size = committed_;
        }
        std::string text = read_text_file(path_);
        text.resize(std::min(size, text.size()));
        return parse_answer_log(text);
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    int fd_ = -1;
    std::uint64_t next_seq_ = 0;
    std::size_t committed_ = 0;
    mutable std::mutex mutex_;
};

struct SurveyConfig {
    std::string bind = "127.0.0.1:8080";
    std::string corpus;    // question bank path
    std::string log = "answers.log";
    std::string media = "media";
    int max_sets = 10;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const SurveyConfig& c) {
    return {{"bind", c.bind}, {"corpus", c.corpus}, {"log", c.log}, {"media", c.media}, {"max_sets", c.max_sets}, {"seed", c.seed}};
}

/// File values first, then VSUMM_SURVEY_<KEY> environment overrides.
inline SurveyConfig load_survey_config(const std::string& file_text, const std::function<const char*(const char*)>& getenv = ::getenv) {
    SurveyConfig c;
    if (!file_text.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(file_text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(std::string("survey config: ") + e.what());
        }
        detail::reject_unknown_keys(j, {"bind", "corpus", "log", "media", "max_sets", "seed"}, "survey config");
        try {
            c.bind = j.value("bind", c.bind);
            c.corpus = j.value("corpus", c.corpus);
            c.log = j.value("log", c.log);
            c.media = j.value("media", c.media);
            c.max_sets = j.value("max_sets", c.max_sets);
            c.seed = j.value("seed", c.seed);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("survey config: ") + e.what());
        }
    }
    auto env = [&getenv](const char* name) -> const char* { return getenv(name); };
    if (const char* v = env("VSUMM_SURVEY_BIND")) c.bind = v;
    if (const char* v = env("VSUMM_SURVEY_CORPUS")) c.corpus = v;
    if (const char* v = env("VSUMM_SURVEY_LOG")) c.log = v;
    if (const char* v = env("VSUMM_SURVEY_MEDIA")) c.media = v;
    try {
        if (const char* v = env("VSUMM_SURVEY_MAX_SETS")) c.max_sets = std::stoi(v);
        if (const char* v = env("VSUMM_SURVEY_SEED")) c.seed = std::stoull(v);
    } catch (const std::exception&) {
        throw ValidationError("survey config: VSUMM_SURVEY_MAX_SETS / VSUMM_SURVEY_SEED must be integers");
    }
    if (c.max_sets < 1) throw ValidationError("survey config: max_sets must be >= 1");
    if (c.bind.rfind(':') == std::string::npos) throw ValidationError("survey config: bind must be host:port");
    return c;
}

class SurveyService {
public:
    using Clock = std::function<std::int64_t()>;

    SurveyService(QuestionBank bank, std::string log_path, int max_sets, std::uint64_t seed, Clock clock = {})
        : bank_(std::move(bank)), log_(std::move(log_path)), max_sets_(max_sets), rng_(seed), clock_(std::move(clock)) {
        if (!clock_)
            clock_ = [] {
                return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
            };
        if (bank_.video_sets.empty()) throw ValidationError("survey: question bank has no video sets");
    }

    const QuestionBank& bank() const { return bank_; }
    int max_sets() const { return max_sets_; }

    nlohmann::json create_session(int count) {
        if (count < 1 || count > max_sets_)
            throw ValidationError("set count must lie in [1, " + std::to_string(max_sets_) + "], got " + std::to_string(count));
        if (static_cast<std::size_t>(count) > bank_.video_sets.size())
            throw ValidationError("corpus holds only " + std::to_string(bank_.video_sets.size()) + " video sets");
        std::lock_guard lock(mutex_);
        std::string id;
        do {
            std::ostringstream hex;
            hex << std::hex;
            for (int i = 0; i < 2; ++i) hex << std::setw(16) << std::setfill('0') << rng_();
            id = hex.str();
        } while (sessions_.count(id));
        // Partial Fisher-Yates: the first `count` entries are a uniform sample.
        std::vector<std::size_t> order(bank_.video_sets.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Session s;
        for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng_() % (order.size() - i));
            std::swap(order[i], order[j]);
            s.sets.push_back(bank_.video_sets[order[i]].id);
        }
        s.submitted.assign(s.sets.size(), false);
        sessions_[id] = s;
        return {{"session_id", id}, {"videoset_ids", s.sets}};
    }

    /// 1-based position; past the end returns {"complete": true}.
    nlohmann::json video_set_at(const std::string& session, std::int64_t position) const {
        std::lock_guard lock(mutex_);
        const Session& s = find_session(session);
        if (position < 1) throw ValidationError("position must be >= 1");
        const auto pos = static_cast<std::size_t>(position);
        for (std::size_t i = 0; i + 1 < pos && i < s.sets.size(); ++i)
            if (!s.submitted[i])
                throw StateError("set at position " + std::to_string(i + 1) + " must be submitted before position " + std::to_string(pos));
        if (pos > s.sets.size()) return {{"complete", true}, {"position", position}, {"total", s.sets.size()}};
        const auto* set = bank_.find_set(s.sets[pos - 1]);
        nlohmann::json questions = nlohmann::json::array();
        for (const auto& qid : set->questions) questions.push_back(to_json(*bank_.find_question(qid)));
        nlohmann::json out = to_json(*set);
        out["questions"] = questions;
        return {{"complete", false}, {"position", position}, {"total", s.sets.size()}, {"video_set", out}};
    }

    /// `answers` maps every question id of the set to its payload.
    nlohmann::json submit(const std::string& session, const std::string& set_id, const nlohmann::json& answers) {
        std::vector<AnswerRecord> records;
        {
            std::lock_guard lock(mutex_);
            const Session& s = find_session(session);
            const auto it = std::find(s.sets.begin(), s.sets.end(), set_id);
            if (it == s.sets.end()) throw NotFoundError("video set '" + set_id + "' is not part of this session");
            const auto pos = static_cast<std::size_t>(it - s.sets.begin());
            for (std::size_t i = 0; i < pos; ++i)
                if (!s.submitted[i]) throw StateError("set at position " + std::to_string(i + 1) + " has not been submitted");
            if (!answers.is_object()) throw ValidationError("answers must be an object keyed by question id");
            const auto* set = bank_.find_set(set_id);
            for (const auto& [qid, _] : answers.items())
                if (std::find(set->questions.begin(), set->questions.end(), qid) == set->questions.end())
                    throw ValidationError("question '" + qid + "' is not part of set '" + set_id + "'");
            const std::int64_t now = clock_();
            for (const auto& qid : set->questions) {
                if (!answers.contains(qid)) throw ValidationError("question '" + qid + "': missing answer");
                const Answer a = parse_answer(*bank_.find_question(qid), answers.at(qid));
                records.push_back({0, session, set_id, qid, answer_to_json(*bank_.find_question(qid), a), now});
            }
        }
        // Serialized writer; sessions stay usable while the disk syncs.
        const auto stored = log_.append(std::move(records));
        std::lock_guard lock(mutex_);
        Session& s = sessions_.at(session);
        s.submitted[static_cast<std::size_t>(std::find(s.sets.begin(), s.sets.end(), set_id) - s.sets.begin())] = true;
        std::vector<std::uint64_t> seqs;
        for (const auto& r : stored) seqs.push_back(r.seq);
        return {{"accepted", stored.size()}, {"seq", seqs}};
    }

    nlohmann::json report() const {
        const auto records = log_.snapshot();
        if (records.empty()) throw StateError("no answers recorded yet");
        return to_json(score_answers(bank_, records));
    }

    const AnswerLog& log() const { return log_; }

private:
    struct Session {
        std::vector<std::string> sets;
        std::vector<bool> submitted;
    };

    const Session& find_session(const std::string& id) const {
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
        return it->second;
    }

    QuestionBank bank_;
    AnswerLog log_;
    int max_sets_;
    std::mt19937_64 rng_;
    Clock clock_;
    std::map<std::string, Session> sessions_;
    mutable std::mutex mutex_;
};

}  // namespace vsumm
