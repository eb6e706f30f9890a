#pragma once

#include <memory>
#include <string>

#include <httplib.h>
// <resolv.h>, pulled in by httplib, defines _res, which collides with Eigen internals.
#ifdef _res
#undef _res
#endif
#include <nlohmann/json.hpp>

#include "survey.hpp"

namespace vsumm {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& body) {
    try {
        send_json(res, 200, body());
    } catch (const NotFoundError& e) {
        send_json(res, 404, {{"error", e.what()}});
    } catch (const StateError& e) {
        send_json(res, 409, {{"error", e.what()}});
    } catch (const ValidationError& e) {
        send_json(res, 400, {{"error", e.what()}});
    } catch (const nlohmann::json::exception& e) {
        send_json(res, 400, {{"error", std::string("malformed request body: ") + e.what()}});
    } catch (const std::exception& e) {
        send_json(res, 500, {{"error", e.what()}});
    }
}

}  // namespace detail

/**
 * Routes:
 *   POST /sessions {count}                      -> {session_id, videoset_ids}
 *   GET  /sessions/{id}/sets/{pos}              -> video set + questions, or {complete: true}
 *   POST /sessions/{id}/sets/{sid}/answers {answers: {qid: payload}} -> {accepted, seq}
 *   GET  /report                                -> score tables
 *   GET  /media/{file}                          -> static file from `media_dir`
 */
inline void install_survey_routes(httplib::Server& server, SurveyService& service, const std::string& media_dir) {
    using detail::guarded;
    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = nlohmann::json::parse(req.body);
            if (!body.is_object() || !body.contains("count") || !body.at("count").is_number_integer())
                throw ValidationError("body must be {\"count\": <integer>}");
            detail::reject_unknown_keys(body, {"count"}, "session request");
            return service.create_session(body.at("count").get<int>());
        });
    });
    server.Get(R"(/sessions/([0-9a-f]+)/sets/(\d+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return service.video_set_at(req.matches[1], std::stoll(req.matches[2])); });
    });
    server.Post(R"(/sessions/([0-9a-f]+)/sets/([^/]+)/answers)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = nlohmann::json::parse(req.body);
            if (!body.is_object() || !body.contains("answers")) throw ValidationError("body must be {\"answers\": {question_id: answer}}");
            detail::reject_unknown_keys(body, {"answers"}, "answer submission");
            return service.submit(req.matches[1], req.matches[2], body.at("answers"));
        });
    });
    server.Get("/report", [&service](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { return service.report(); });
    });
    if (!media_dir.empty()) server.set_mount_point("/media", media_dir);
}

}  // namespace vsumm
