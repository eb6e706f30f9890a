#pragma once

// Dataset manifest: per-video frame counts, dataset segmentation and user summaries.
//
// {
//   "schema_version": 1,
//   "videos": [
//     {"id": "...", "total_frames": T, "fps": 30.0,
//      "segments": [[1, 40], [41, 95], ...],        // 1-based, inclusive
//      "user_summaries": [[frame, ...], ...]}
//   ]
// }

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

inline constexpr int kManifestSchemaVersion = 1;

/// Inclusive 1-based frame range.
struct FrameRange {
    Index first = 1;
    Index last = 1;

    Index length() const { return last - first + 1; }
    bool operator==(const FrameRange&) const = default;
};

struct ManifestVideo {
    VideoMeta meta;
    std::vector<FrameRange> segments;
    std::vector<std::vector<Index>> user_summaries;  // each sorted, unique
};

struct DatasetManifest {
    std::vector<ManifestVideo> videos;

    const ManifestVideo* find(const std::string& id) const {
        for (const auto& v : videos)
            if (v.meta.video_id == id) return &v;
        return nullptr;
    }
};

/// Segments must be a disjoint, contiguous cover of [1, total] in order.
inline void validate_segments(const std::vector<FrameRange>& segments, Index total) {
    if (segments.empty()) throw ValidationError("segments: empty segment list");
    Index expected = 1;
    for (const auto& s : segments) {
        if (s.last < s.first)
            throw ValidationError("segments: reversed range [" + std::to_string(s.first) + ", " +
                                  std::to_string(s.last) + "]");
        if (s.first < expected)
            throw ValidationError("segments: overlap at frame " + std::to_string(s.first));
        if (s.first > expected) throw ValidationError("segments: gap before frame " + std::to_string(s.first));
        expected = s.last + 1;
    }
    if (expected != total + 1)
        throw ValidationError("segments: cover ends at " + std::to_string(expected - 1) + " but video has " +
                              std::to_string(total) + " frames");
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ValidationError(where + ": unknown key '" + key + "' (accepted: " + list + ")");
        }
}

}  // namespace detail

inline DatasetManifest parse_manifest(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError("manifest: document must be an object");
    detail::reject_unknown_keys(doc, {"schema_version", "videos"}, "manifest");
    if (!doc.contains("schema_version") || doc.at("schema_version") != kManifestSchemaVersion)
        throw ValidationError("manifest: schema_version must be " + std::to_string(kManifestSchemaVersion));
    DatasetManifest manifest;
    try {
        for (const auto& v : doc.at("videos")) {
            detail::reject_unknown_keys(v, {"id", "total_frames", "fps", "segments", "user_summaries"},
                                        "manifest video");
            ManifestVideo video;
            video.meta.video_id = v.at("id").get<std::string>();
            video.meta.total_frames = v.at("total_frames").get<Index>();
            video.meta.input_fps = v.at("fps").get<double>();
            validate(video.meta);
            const Index total = video.meta.total_frames;
            for (const auto& seg : v.at("segments")) {
                if (!seg.is_array() || seg.size() != 2)
                    throw ValidationError("manifest: segment must be [start, end]");
                video.segments.push_back({seg[0].get<Index>(), seg[1].get<Index>()});
            }
            validate_segments(video.segments, total);
            if (v.contains("user_summaries"))
                for (const auto& summary : v.at("user_summaries")) {
                    std::vector<Index> frames = summary.get<std::vector<Index>>();
                    for (Index f : frames)
                        if (f < 1 || f > total)
                            throw ValidationError("manifest: user summary frame " + std::to_string(f) +
                                                  " outside [1, " + std::to_string(total) + "] for video '" +
                                                  video.meta.video_id + "'");
                    std::sort(frames.begin(), frames.end());
                    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
                    video.user_summaries.push_back(std::move(frames));
                }
            if (manifest.find(video.meta.video_id))
                throw ValidationError("manifest: duplicate video id '" + video.meta.video_id + "'");
            manifest.videos.push_back(std::move(video));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("manifest: ") + e.what());
    }
    return manifest;
}

inline DatasetManifest load_manifest(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("manifest: malformed document: ") + e.what());
    }
    return parse_manifest(doc);
}

inline nlohmann::json to_json(const DatasetManifest& manifest) {
    nlohmann::json videos = nlohmann::json::array();
    for (const auto& v : manifest.videos) {
        nlohmann::json segments = nlohmann::json::array();
        for (const auto& s : v.segments) segments.push_back({s.first, s.last});
        videos.push_back({{"id", v.meta.video_id},
                          {"total_frames", v.meta.total_frames},
                          {"fps", v.meta.input_fps},
                          {"segments", segments},
                          {"user_summaries", v.user_summaries}});
    }
    return {{"schema_version", kManifestSchemaVersion}, {"videos", videos}};
}

}  // namespace vsumm
