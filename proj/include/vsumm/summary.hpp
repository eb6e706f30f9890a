#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "manifest.hpp"
#include "types.hpp"

namespace vsumm {

/// L' = max(1, floor(min(T * rate, max_seconds * output_fps))).
inline Index target_length(Index total_frames, double rate, double max_seconds, double output_fps) {
    if (total_frames < 1) throw ValidationError("target length: total frames must be >= 1");
    if (!(rate > 0.0 && rate < 1.0)) throw ValidationError("target length: summary rate must lie in (0, 1)");
    if (!(max_seconds > 0.0) || !(output_fps > 0.0)) throw ValidationError("target length: limits must be positive");
    const double raw = std::min(static_cast<double>(total_frames) * rate, max_seconds * output_fps);
    return std::max<Index>(1, static_cast<Index>(std::floor(raw)));
}

/**
 * Windowed summary around keyframes. `keyframes` are 1-based sample indexes,
 * `importance` is per sample, `sample_indexes` maps samples to frames.
 */
inline SummarySelection usable_summary(const std::vector<Index>& keyframes, const std::vector<double>& importance,
                                       const std::vector<Index>& sample_indexes, Index total_frames, Index target) {
    if (keyframes.empty()) throw ValidationError("usable summary: no keyframes");
    if (target < 1) throw ValidationError("usable summary: target length must be >= 1");
    for (Index k : keyframes)
        if (k < 1 || k > static_cast<Index>(sample_indexes.size()) || k > static_cast<Index>(importance.size()))
            throw ValidationError("usable summary: keyframe " + std::to_string(k) + " outside the sample range");

    std::vector<std::uint8_t> bits(static_cast<std::size_t>(total_frames), 0);
    const auto frame_of = [&](Index k) { return sample_indexes[static_cast<std::size_t>(k - 1)]; };
    if (target <= static_cast<Index>(keyframes.size())) {
        std::vector<Index> order = keyframes;
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
            const double va = importance[static_cast<std::size_t>(a - 1)];
            const double vb = importance[static_cast<std::size_t>(b - 1)];
            return va > vb || (va == vb && a < b);
        });
        for (Index i = 0; i < target; ++i) bits[static_cast<std::size_t>(frame_of(order[static_cast<std::size_t>(i)]) - 1)] = 1;
    } else {
        const Index per_key = target / static_cast<Index>(keyframes.size());
        const Index half = (per_key - 1) / 2;
        for (Index k : keyframes) {
            const Index t = frame_of(k);
            for (Index i = std::max<Index>(1, t - half); i <= std::min(total_frames, t + half); ++i)
                bits[static_cast<std::size_t>(i - 1)] = 1;
        }
    }
    return selection_from_bits(std::move(bits), target);
}

enum class Extrapolation { Linear, Nearest };

inline Extrapolation parse_extrapolation(const std::string& s) {
    if (s == "linear") return Extrapolation::Linear;
    if (s == "nearest") return Extrapolation::Nearest;
    throw ValidationError("unknown extrapolation '" + s + "' (accepted: linear, nearest)");
}

inline std::string to_string(Extrapolation e) { return e == Extrapolation::Linear ? "linear" : "nearest"; }

/// Per-sample scores to per-frame scores. Frames outside [t_1, t_last] copy the
/// closest sample; nearest-mode ties go to the earlier sample.
inline std::vector<double> extrapolate(const std::vector<double>& v, const std::vector<Index>& t, Index total_frames,
                                       Extrapolation mode) {
    if (v.empty() || v.size() != t.size()) throw ValidationError("extrapolate: scores and sample indexes differ in length");
    if (t.back() > total_frames || t.front() < 1) throw ValidationError("extrapolate: sample index outside [1, T]");
    std::vector<double> out(static_cast<std::size_t>(total_frames));
    std::size_t j = 0;  // t[j] <= i < t[j+1] once i >= t[0]
    for (Index i = 1; i <= total_frames; ++i) {
        while (j + 1 < t.size() && t[j + 1] <= i) ++j;
        double value;
        if (i <= t.front())
            value = v.front();
        else if (j + 1 == t.size())
            value = v.back();
        else {
            const double left = static_cast<double>(i - t[j]);
            const double right = static_cast<double>(t[j + 1] - i);
            if (mode == Extrapolation::Nearest)
                value = left <= right ? v[j] : v[j + 1];
            else
                value = (right * v[j] + left * v[j + 1]) / (left + right);
        }
        out[static_cast<std::size_t>(i - 1)] = value;
    }
    return out;
}

/// Sum of per-frame importance inside each segment.
inline std::vector<double> segment_values(const std::vector<double>& per_frame, const std::vector<FrameRange>& segments) {
    std::vector<double> out;
    out.reserve(segments.size());
    for (const auto& s : segments) {
        if (s.first < 1 || s.last > static_cast<Index>(per_frame.size()))
            throw ValidationError("segment outside the importance range");
        out.push_back(std::accumulate(per_frame.begin() + (s.first - 1), per_frame.begin() + s.last, 0.0));
    }
    return out;
}

struct KnapsackResult {
    std::vector<std::uint8_t> chosen;
    double value = 0.0;
    Index weight = 0;
};

/**
 * Exact 0/1 knapsack over integer weights. Among optimal subsets the one
 * that takes earlier items is preferred: scanning items in order, an item is
 * taken whenever taking it still allows an optimal completion.
 */
inline KnapsackResult knapsack(const std::vector<double>& values, const std::vector<Index>& weights, Index capacity) {
    if (capacity < 0) throw ValidationError("knapsack: negative budget");
    if (values.size() != weights.size()) throw ValidationError("knapsack: values and weights differ in length");
    const std::size_t n = values.size();
    const auto cap = static_cast<std::size_t>(capacity);
    for (Index w : weights)
        if (w < 0) throw ValidationError("knapsack: negative weight");

    // best[i][c]: optimum over items i..n-1 with capacity c.
    std::vector<std::vector<double>> best(n + 1, std::vector<double>(cap + 1, 0.0));
    for (std::size_t i = n; i-- > 0;) {
        const auto w = static_cast<std::size_t>(weights[i]);
        for (std::size_t c = 0; c <= cap; ++c) {
            double b = best[i + 1][c];
            if (w <= c) b = std::max(b, values[i] + best[i + 1][c - w]);
            best[i][c] = b;
        }
    }
    KnapsackResult r;
    r.chosen.assign(n, 0);
    std::size_t c = cap;
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = static_cast<std::size_t>(weights[i]);
        if (w <= c && values[i] + best[i + 1][c - w] >= best[i + 1][c]) {
            r.chosen[i] = 1;
            r.value += values[i];
            r.weight += weights[i];
            c -= w;
        }
    }
    return r;
}

/// Evaluation summary: segment values from per-frame importance, then knapsack.
inline SummarySelection knapsack_summary(const std::vector<double>& per_frame, const std::vector<FrameRange>& segments,
                                         Index budget) {
    const auto total = static_cast<Index>(per_frame.size());
    validate_segments(segments, total);
    std::vector<Index> weights;
    for (const auto& s : segments) weights.push_back(s.length());
    const auto pick = knapsack(segment_values(per_frame, segments), weights, budget);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(total), 0);
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (pick.chosen[i])
            std::fill(bits.begin() + (segments[i].first - 1), bits.begin() + segments[i].last, std::uint8_t{1});
    return selection_from_bits(std::move(bits), budget);
}

/// Default evaluation budget: floor(fraction * T).
inline Index evaluation_budget(Index total_frames, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("budget fraction must lie in (0, 1]");
    return static_cast<Index>(std::floor(static_cast<double>(total_frames) * fraction));
}

/// Alternating run lengths, starting with a (possibly empty) run of zeros.
inline std::vector<Index> rle_encode(const std::vector<std::uint8_t>& bits) {
    std::vector<Index> runs;
    std::uint8_t current = 0;
    Index run = 0;
    for (std::uint8_t b : bits) {
        const std::uint8_t bit = b ? 1 : 0;
        if (bit != current) {
            runs.push_back(run);
            current = bit;
            run = 0;
        }
        ++run;
    }
    runs.push_back(run);
    return runs;
}

inline std::vector<std::uint8_t> rle_decode(const std::vector<Index>& runs) {
    std::vector<std::uint8_t> bits;
    std::uint8_t current = 0;
    for (Index r : runs) {
        if (r < 0) throw ValidationError("negative run length");
        bits.insert(bits.end(), static_cast<std::size_t>(r), current);
        current ^= 1;
    }
    return bits;
}

inline nlohmann::json selection_to_json(const SummarySelection& s) {
    return {{"selected_frames", s.selected_frames},
            {"selection_bits", rle_encode(s.selection)},
            {"total_frames", s.selection.size()},
            {"budget_frames", s.budget_frames}};
}

inline SummarySelection selection_from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"selected_frames", "selection_bits", "total_frames", "budget_frames"}, "summary selection");
    auto bits = rle_decode(j.at("selection_bits").get<std::vector<Index>>());
    if (bits.size() != j.at("total_frames").get<std::size_t>()) throw ValidationError("selection bits do not sum to total_frames");
    auto s = selection_from_bits(std::move(bits), j.at("budget_frames").get<Index>());
    if (j.contains("selected_frames") && j.at("selected_frames").get<std::vector<Index>>() != s.selected_frames)
        throw ValidationError("selected_frames disagrees with selection_bits");
    return s;
}

}  // namespace vsumm
