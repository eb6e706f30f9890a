#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "vsumm/survey.hpp"
#include "vsumm/survey_http.hpp"

using namespace vsumm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

QuestionBank fixture_bank() { return load_question_bank(read_text_file(VSUMM_FIXTURES "/question_bank.json")); }

std::string fresh_log(const std::string& name) {
    const auto path = fs::path(::testing::TempDir()) / name;
    fs::remove(path);
    return path.string();
}

json answers_for(const QuestionBank& bank, const std::string& set_id) {
    json out = json::object();
    for (const auto& qid : bank.find_set(set_id)->questions) {
        const auto* q = bank.find_question(qid);
        if (q->type == QuestionType::Mcq) out[qid] = q->options[0];
        else if (q->type == QuestionType::Checkbox) out[qid] = json::array({q->options[0]});
        else out[qid] = 7;
    }
    return out;
}

}  // namespace

TEST(SurveyService, SessionSampling) {
    SurveyService svc(fixture_bank(), fresh_log("s1.log"), 5, 1);
    const auto s = svc.create_session(3);
    const auto ids = s["videoset_ids"].get<std::vector<std::string>>();
    EXPECT_EQ(ids.size(), 3u);
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 3u);
    EXPECT_EQ(s["session_id"].get<std::string>().size(), 32u);
    EXPECT_NE(svc.create_session(3)["session_id"], s["session_id"]);
    EXPECT_THROW(svc.create_session(0), ValidationError);
    EXPECT_THROW(svc.create_session(6), ValidationError);
    SurveyService small(fixture_bank(), fresh_log("s1b.log"), 10, 1);
    EXPECT_THROW(small.create_session(6), ValidationError);  // corpus has 5 sets
}

TEST(SurveyService, ForwardOnlyFlow) {
    const auto bank = fixture_bank();
    SurveyService svc(bank, fresh_log("s2.log"), 5, 2, [] { return std::int64_t{42}; });
    const auto s = svc.create_session(2);
    const std::string sid = s["session_id"];
    const auto ids = s["videoset_ids"].get<std::vector<std::string>>();
    EXPECT_EQ(svc.video_set_at(sid, 1)["video_set"]["id"], ids[0]);
    EXPECT_THROW(svc.video_set_at(sid, 2), StateError);
    EXPECT_THROW(svc.submit(sid, ids[1], answers_for(bank, ids[1])), StateError);
    EXPECT_THROW(svc.video_set_at("ffff", 1), NotFoundError);
    EXPECT_THROW(svc.submit(sid, "nope", json::object()), NotFoundError);

    auto bad = answers_for(bank, ids[0]);
    bad["zz"] = 1;
    EXPECT_THROW(svc.submit(sid, ids[0], bad), ValidationError);
    EXPECT_EQ(read_text_file(svc.log().path()), "");  // nothing stored before a valid submit

    const auto ack = svc.submit(sid, ids[0], answers_for(bank, ids[0]));
    EXPECT_EQ(ack["accepted"], bank.find_set(ids[0])->questions.size());
    EXPECT_EQ(svc.video_set_at(sid, 2)["video_set"]["id"], ids[1]);
    svc.submit(sid, ids[1], answers_for(bank, ids[1]));
    const auto done = svc.video_set_at(sid, 3);
    EXPECT_TRUE(done["complete"].get<bool>());
    for (const auto& r : svc.log().snapshot()) {
        EXPECT_EQ(r.participant, sid);
        EXPECT_EQ(r.timestamp, 42);
    }
}

TEST(SurveyService, LinearOutOfRangeNamesQuestion) {
    const auto bank = fixture_bank();
    SurveyService svc(bank, fresh_log("s3.log"), 5, 3);
    // Find a session that contains the pair set p1.
    for (int attempt = 0; attempt < 50; ++attempt) {
        const auto s = svc.create_session(5);
        const auto ids = s["videoset_ids"].get<std::vector<std::string>>();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == "p1") {
                try {
                    svc.submit(s["session_id"], ids[i], json{{"q3", 11}});
                } catch (const ValidationError& e) {
                    EXPECT_NE(std::string(e.what()).find("q3"), std::string::npos);
                    return;
                } catch (const StateError&) {
                    break;  // not first in this session
                }
            }
        }
    }
    FAIL() << "no session started with p1";
}

TEST(SurveyService, ResubmitSupersedesAndReport) {
    const auto bank = fixture_bank();
    const auto log = fresh_log("s4.log");
    {
        std::ofstream seed(log);
        seed << read_text_file(VSUMM_FIXTURES "/answers.log");
    }
    SurveyService svc(bank, log, 5, 4);
    const auto before = svc.report();
    EXPECT_NEAR(before["methods"]["ours"].get<double>(), 121.0 / 180.0, 1e-15);
    const std::string prefix = read_text_file(log);

    const auto s = svc.create_session(1);
    const std::string sid = s["session_id"], set = s["videoset_ids"][0];
    svc.submit(sid, set, answers_for(bank, set));
    const auto ack = svc.submit(sid, set, answers_for(bank, set));
    EXPECT_GE(ack["seq"][0].get<std::uint64_t>(), 15u);  // continues after the existing log
    const std::string after = read_text_file(log);
    EXPECT_EQ(after.substr(0, prefix.size()), prefix);  // append-only
    const auto resolved = resolve_records(bank, svc.log().snapshot());
    std::size_t from_session = 0;
    for (const auto& [r, a] : resolved) from_session += r.participant == sid;
    EXPECT_EQ(from_session, bank.find_set(set)->questions.size());
}

TEST(SurveyService, EmptyLogReportIsStateError) {
    SurveyService svc(fixture_bank(), fresh_log("s5.log"), 5, 5);
    EXPECT_THROW(svc.report(), StateError);
}

TEST(AnswerLog, RejectsPartialTrailingRecord) {
    const auto log = fresh_log("partial.log");
    {
        std::ofstream out(log);
        out << "{\"seq\":0";
    }
    EXPECT_THROW(AnswerLog{log}, ValidationError);
}

TEST(AnswerLog, ConcurrentAppendsAreSerialized) {
    AnswerLog log(fresh_log("concurrent.log"));
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&log, t] {
            for (int i = 0; i < 10; ++i) log.append({{0, "ab", "o1", "q1", "cooking", t}});
        });
    for (auto& t : threads) t.join();
    const auto records = log.snapshot();
    ASSERT_EQ(records.size(), 80u);
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(records[i].seq, i);
}

TEST(SurveyConfig, FileAndEnvOverrides) {
    const auto none = [](const char*) -> const char* { return nullptr; };
    const auto base = load_survey_config(R"({"bind":"0.0.0.0:9000","corpus":"bank.json","max_sets":4})", none);
    EXPECT_EQ(base.bind, "0.0.0.0:9000");
    EXPECT_EQ(base.max_sets, 4);
    EXPECT_EQ(base.log, "answers.log");
    const auto env = [](const char* name) -> const char* {
        if (std::string(name) == "VSUMM_SURVEY_MAX_SETS") return "7";
        if (std::string(name) == "VSUMM_SURVEY_SEED") return "99";
        if (std::string(name) == "VSUMM_SURVEY_LOG") return "/tmp/x.log";
        return nullptr;
    };
    const auto over = load_survey_config(R"({"max_sets":4})", env);
    EXPECT_EQ(over.max_sets, 7);
    EXPECT_EQ(over.seed, 99u);
    EXPECT_EQ(over.log, "/tmp/x.log");
    EXPECT_THROW(load_survey_config(R"({"port":1})", none), ValidationError);
    EXPECT_THROW(load_survey_config(R"({"max_sets":0})", none), ValidationError);
}

TEST(SurveyHttp, EndToEnd) {
    const auto bank = fixture_bank();
    const auto media = fs::path(::testing::TempDir()) / "survey_media";
    fs::create_directories(media);
    {
        std::ofstream(media / "v1.mp4") << "not really a video";
    }
    SurveyService svc(bank, fresh_log("http.log"), 5, 6);
    httplib::Server server;
    install_survey_routes(server, svc, media.string());
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread loop([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    EXPECT_EQ(client.Get("/report")->status, 409);
    EXPECT_EQ(client.Post("/sessions", R"({"count": 0})", "application/json")->status, 400);
    EXPECT_EQ(client.Post("/sessions", R"({"count": 2, "name": "x"})", "application/json")->status, 400);
    EXPECT_EQ(client.Post("/sessions", "{bad", "application/json")->status, 400);

    const auto created = client.Post("/sessions", R"({"count": 2})", "application/json");
    ASSERT_EQ(created->status, 200);
    const auto session = json::parse(created->body);
    const std::string sid = session["session_id"];
    const auto ids = session["videoset_ids"].get<std::vector<std::string>>();

    EXPECT_EQ(client.Get("/sessions/" + sid + "/sets/2")->status, 409);
    EXPECT_EQ(client.Get("/sessions/abcdef/sets/1")->status, 404);
    const auto first = client.Get("/sessions/" + sid + "/sets/1");
    ASSERT_EQ(first->status, 200);
    EXPECT_EQ(json::parse(first->body)["video_set"]["id"], ids[0]);

    const std::string path = "/sessions/" + sid + "/sets/" + ids[0] + "/answers";
    EXPECT_EQ(client.Post(path, json{{"answers", json::object()}}.dump(), "application/json")->status, 400);
    const auto ok = client.Post(path, json{{"answers", answers_for(bank, ids[0])}}.dump(), "application/json");
    ASSERT_EQ(ok->status, 200);
    EXPECT_TRUE(json::parse(ok->body).contains("seq"));
    const auto path2 = "/sessions/" + sid + "/sets/" + ids[1] + "/answers";
    ASSERT_EQ(client.Post(path2, json{{"answers", answers_for(bank, ids[1])}}.dump(), "application/json")->status, 200);
    EXPECT_TRUE(json::parse(client.Get("/sessions/" + sid + "/sets/3")->body)["complete"].get<bool>());

    const auto report = client.Get("/report");
    EXPECT_EQ(report->status, 200);
    EXPECT_TRUE(json::parse(report->body).contains("methods"));
    const auto file = client.Get("/media/v1.mp4");
    ASSERT_TRUE(file);
    EXPECT_EQ(file->status, 200);
    EXPECT_EQ(file->body, "not really a video");

    server.stop();
    loop.join();
    // The log written over HTTP is accepted by the offline scorer.
    EXPECT_NO_THROW(score_answers(bank, parse_answer_log(read_text_file(svc.log().path()))));
}
