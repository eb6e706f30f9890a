#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

struct KeyframeRules {
    bool mean = false;
    bool middle = false;
    bool ends = false;

    bool empty() const { return !mean && !middle && !ends; }
    bool mean_only() const { return mean && !middle && !ends; }
    bool operator==(const KeyframeRules&) const = default;
};

/// "middle+ends", "mean", ...
inline KeyframeRules parse_keyframe_rules(const std::string& text) {
    KeyframeRules rules;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '+')) {
        if (part == "mean")
            rules.mean = true;
        else if (part == "middle")
            rules.middle = true;
        else if (part == "ends")
            rules.ends = true;
        else
            throw ValidationError("unknown keyframe rule '" + part + "' (accepted: mean, middle, ends)");
    }
    if (rules.empty()) throw ValidationError("keyframe rules must not be empty");
    return rules;
}

inline std::string format_keyframe_rules(const KeyframeRules& rules) {
    std::string out;
    auto add = [&out](const char* name) { out += (out.empty() ? "" : "+") + std::string(name); };
    if (rules.mean) add("mean");
    if (rules.middle) add("middle");
    if (rules.ends) add("ends");
    return out;
}

/**
 * Keyframes per partition as 1-based sample indexes. Mean picks the sample
 * closest (euclidean) to the partition centroid, smallest index on ties.
 * `embeddings` may be null unless Mean is requested.
 */
inline KeyframeSet select_keyframes(const PartitionSet& partitions, const Matrix* embeddings, const KeyframeRules& rules) {
    if (rules.empty()) throw ValidationError("keyframe rules must not be empty");
    if (rules.mean && embeddings == nullptr) throw ValidationError("Mean keyframe rule requires embeddings");
    if (rules.mean && embeddings->rows() < partitions.total())
        throw ValidationError("embedding rows fewer than partitioned samples");

    KeyframeSet out;
    std::set<Index> all;
    for (const auto& sec : partitions.sections) {
        std::set<Index> keys;
        if (rules.mean) {
            const auto block = embeddings->middleRows(sec.start - 1, sec.length);
            const Eigen::RowVectorXd centroid = block.colwise().mean();
            Index best = sec.start;
            double best_d = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < sec.length; ++j) {
                const double d = (block.row(j) - centroid).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = sec.start + j;
                }
            }
            keys.insert(best);
        }
        if (rules.middle) keys.insert(sec.start + sec.length / 2);
        if (rules.ends) {
            keys.insert(sec.start);
            keys.insert(sec.end());
        }
        out.per_partition.emplace_back(keys.begin(), keys.end());
        all.insert(keys.begin(), keys.end());
    }
    out.all.assign(all.begin(), all.end());
    return out;
}

/// Each sample scores the length of its section.
inline std::vector<double> flat_scores(const PartitionSet& partitions) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(partitions.total()));
    for (const auto& sec : partitions.sections) v.insert(v.end(), static_cast<std::size_t>(sec.length), static_cast<double>(sec.length));
    return v;
}

struct Keypoints {
    std::vector<Index> high;  // keyframes
    std::vector<Index> low;   // all samples farthest from their nearest keyframe
};

/// Per partition. A position in both sets is treated as high when biasing.
inline std::vector<Keypoints> keypoints(const PartitionSet& partitions, const KeyframeSet& keyframes) {
    if (keyframes.per_partition.size() != partitions.sections.size())
        throw ValidationError("keyframe set does not match partition count");
    std::vector<Keypoints> out;
    for (std::size_t i = 0; i < partitions.sections.size(); ++i) {
        const auto& sec = partitions.sections[i];
        const auto& keys = keyframes.per_partition[i];
        if (keys.empty()) throw ValidationError("partition " + std::to_string(i + 1) + " has no keyframes");
        Keypoints kp;
        kp.high = keys;
        std::vector<Index> dist(static_cast<std::size_t>(sec.length));
        Index far = 0;
        for (Index j = sec.start; j <= sec.end(); ++j) {
            Index d = std::numeric_limits<Index>::max();
            for (Index k : keys) d = std::min(d, j > k ? j - k : k - j);
            dist[static_cast<std::size_t>(j - sec.start)] = d;
            far = std::max(far, d);
        }
        for (Index j = sec.start; j <= sec.end(); ++j)
            if (dist[static_cast<std::size_t>(j - sec.start)] == far) kp.low.push_back(j);
        out.push_back(std::move(kp));
    }
    return out;
}

enum class BiasScheme { Increase, Decrease };
enum class Interpolation { Cosine, Linear };

inline BiasScheme parse_bias_scheme(const std::string& s) {
    if (s == "increase") return BiasScheme::Increase;
    if (s == "decrease") return BiasScheme::Decrease;
    throw ValidationError("unknown bias scheme '" + s + "' (accepted: increase, decrease)");
}

inline Interpolation parse_interpolation(const std::string& s) {
    if (s == "cosine") return Interpolation::Cosine;
    if (s == "linear") return Interpolation::Linear;
    throw ValidationError("unknown interpolation '" + s + "' (accepted: cosine, linear)");
}

inline std::string to_string(BiasScheme s) { return s == BiasScheme::Increase ? "increase" : "decrease"; }
inline std::string to_string(Interpolation s) { return s == Interpolation::Cosine ? "cosine" : "linear"; }

/// Value at i strictly between keypoints j < k.
inline double interpolate(Interpolation kind, Index i, Index j, double vj, Index k, double vk) {
    const double x = static_cast<double>(i - j) / static_cast<double>(k - j);
    if (kind == Interpolation::Cosine) return (vj - vk) / 2.0 * std::cos(std::numbers::pi * x) + (vj + vk) / 2.0;
    return vj + (vk - vj) * x;
}

/**
 * Pins keypoint values according to the scheme, then fills each partition by
 * interpolating between consecutive keypoints. Samples before the first or
 * after the last keypoint of a partition copy that keypoint's value.
 */
inline std::vector<double> bias_and_interpolate(const std::vector<double>& flat, const PartitionSet& partitions,
                                                const std::vector<Keypoints>& points, BiasScheme scheme, double bias,
                                                Interpolation interp) {
    if (!std::isfinite(bias) || bias < 0.0) throw ValidationError("bias must be finite and non-negative");
    if (scheme == BiasScheme::Decrease && bias > 1.0) throw ValidationError("decrease bias must lie in [0, 1]");
    if (static_cast<Index>(flat.size()) != partitions.total()) throw ValidationError("flat scores do not match partitions");
    if (points.size() != partitions.sections.size()) throw ValidationError("keypoints do not match partitions");

    std::vector<double> v = flat;
    for (std::size_t p = 0; p < partitions.sections.size(); ++p) {
        const auto& sec = partitions.sections[p];
        std::vector<std::pair<Index, double>> pins;
        for (Index j : points[p].high) {
            const double base = flat[static_cast<std::size_t>(j - 1)];
            pins.emplace_back(j, scheme == BiasScheme::Increase ? base * (1.0 + bias) : base);
        }
        for (Index j : points[p].low) {
            if (std::binary_search(points[p].high.begin(), points[p].high.end(), j)) continue;
            const double base = flat[static_cast<std::size_t>(j - 1)];
            pins.emplace_back(j, scheme == BiasScheme::Decrease ? base * (1.0 - bias) : base);
        }
        std::sort(pins.begin(), pins.end());
        for (Index i = sec.start; i <= sec.end(); ++i) {
            auto hi = std::lower_bound(pins.begin(), pins.end(), i, [](const auto& pin, Index x) { return pin.first < x; });
            double value;
            if (hi != pins.end() && hi->first == i)
                value = hi->second;
            else if (hi == pins.begin())
                value = hi->second;
            else if (hi == pins.end())
                value = std::prev(hi)->second;
            else {
                const auto lo = std::prev(hi);
                value = interpolate(interp, i, lo->first, lo->second, hi->first, hi->second);
            }
            v[static_cast<std::size_t>(i - 1)] = value;
        }
    }
    return v;
}

}  // namespace vsumm
