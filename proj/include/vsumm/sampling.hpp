#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

/// Frame-subsampling plan: one sample at the middle of every snippet of
/// `snippet_length` original frames.
struct SamplingPlan {
    Index total_frames = 1;
    Index snippet_length = 1;
    Index first_index = 1;
    std::vector<Index> indexes;  // 1-based, arithmetic with step snippet_length
    double input_fps = 1.0;
    double target_fps = 1.0;

    Index count() const { return static_cast<Index>(indexes.size()); }
    double achieved_fps() const { return input_fps / static_cast<double>(snippet_length); }
};

/// Snippet length used to bring `input_fps` close to `target_fps`: round-half-up
/// of the rate ratio, never below one frame.
inline Index snippet_length_for(double input_fps, double target_fps) {
    const double ratio = input_fps / target_fps;
    return std::max<Index>(1, static_cast<Index>(std::floor(ratio + 0.5)));
}

inline SamplingPlan plan_sampling(Index total_frames, double input_fps, double target_fps) {
    if (total_frames < 1) throw ValidationError("sampling: total frame count must be >= 1");
    if (!(input_fps > 0.0) || !(target_fps > 0.0)) throw ValidationError("sampling: frame rates must be positive");

    SamplingPlan plan;
    plan.total_frames = total_frames;
    plan.input_fps = input_fps;
    plan.target_fps = target_fps;
    plan.snippet_length = snippet_length_for(input_fps, target_fps);
    plan.first_index = (plan.snippet_length + 1) / 2;
    // A video shorter than half a snippet still gets its own midpoint.
    if (plan.first_index > total_frames) plan.first_index = (total_frames + 1) / 2;

    const Index count = (total_frames - plan.first_index) / plan.snippet_length + 1;
    plan.indexes.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) plan.indexes.push_back(plan.first_index + plan.snippet_length * i);
    return plan;
}

/// Picks source[t_i] for every planned index. `source` is indexed 1..T.
template <typename T>
std::vector<T> apply_plan(const SamplingPlan& plan, std::span<const T> source) {
    if (static_cast<Index>(source.size()) != plan.total_frames)
        throw ValidationError("sampling: source has " + std::to_string(source.size()) + " frames, plan expects " +
                              std::to_string(plan.total_frames));
    std::vector<T> out;
    out.reserve(plan.indexes.size());
    for (Index t : plan.indexes) out.push_back(source[static_cast<std::size_t>(t - 1)]);
    return out;
}

/// Row-wise variant for a T x D matrix of per-frame embeddings.
inline Matrix apply_plan(const SamplingPlan& plan, const Matrix& per_frame) {
    if (per_frame.rows() != plan.total_frames)
        throw ValidationError("sampling: matrix has " + std::to_string(per_frame.rows()) + " rows, plan expects " +
                              std::to_string(plan.total_frames));
    Matrix out(plan.count(), per_frame.cols());
    for (Index i = 0; i < plan.count(); ++i) out.row(i) = per_frame.row(plan.indexes[static_cast<std::size_t>(i)] - 1);
    return out;
}

}  // namespace vsumm
