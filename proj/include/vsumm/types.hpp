#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace vsumm {

/// 1-based index into original frames or into the sampled sequence.
using Index = std::int64_t;

/// Row-per-sample real matrix.
using Matrix = Eigen::MatrixXd;

struct VideoMeta {
    std::string video_id;
    Index total_frames = 1;  // T
    double input_fps = 1.0;  // r_I
    Index frame_width = 1;
    Index frame_height = 1;
    Index channels = 1;

    bool operator==(const VideoMeta&) const = default;
};

inline void validate(const VideoMeta& meta) {
    if (meta.total_frames < 1) throw ValidationError("video meta: total_frames must be >= 1");
    if (!(meta.input_fps > 0.0) || !std::isfinite(meta.input_fps))
        throw ValidationError("video meta: input_fps must be positive");
    if (meta.frame_width < 1 || meta.frame_height < 1 || meta.channels < 1)
        throw ValidationError("video meta: frame dimensions must be >= 1");
}

/// Embeddings of the sampled frames. Row i holds the embedding of original frame
/// sample_indexes[i].
struct EmbeddingSet {
    VideoMeta meta;
    std::vector<Index> sample_indexes;
    Matrix embeddings;
    double sample_fps = 1.0;

    Index samples() const { return static_cast<Index>(sample_indexes.size()); }
    Index dim() const { return embeddings.cols(); }

    bool operator==(const EmbeddingSet& other) const {
        return meta == other.meta && sample_indexes == other.sample_indexes &&
               sample_fps == other.sample_fps && embeddings.rows() == other.embeddings.rows() &&
               embeddings.cols() == other.embeddings.cols() && embeddings == other.embeddings;
    }
};

inline void validate(const EmbeddingSet& set) {
    validate(set.meta);
    if (set.sample_indexes.empty()) throw ValidationError("embedding set: no samples");
    if (static_cast<Index>(set.embeddings.rows()) != set.samples())
        throw ValidationError("embedding set: row count does not match sample index count");
    if (set.embeddings.cols() < 1) throw ValidationError("embedding set: dimension must be >= 1");
    if (!(set.sample_fps > 0.0)) throw ValidationError("embedding set: sample_fps must be positive");
    for (std::size_t i = 0; i < set.sample_indexes.size(); ++i) {
        const Index t = set.sample_indexes[i];
        if (t < 1 || t > set.meta.total_frames)
            throw ValidationError("embedding set: sample index " + std::to_string(t) + " outside [1, " +
                                  std::to_string(set.meta.total_frames) + "]");
        if (i > 0 && t <= set.sample_indexes[i - 1])
            throw ValidationError("embedding set: sample indexes not strictly increasing at position " +
                                  std::to_string(i + 1));
    }
    for (Index r = 0; r < set.embeddings.rows(); ++r)
        for (Index c = 0; c < set.embeddings.cols(); ++c)
            if (!std::isfinite(set.embeddings(r, c)))
                throw ValidationError("embedding set: non-finite entry at row " + std::to_string(r + 1) +
                                      ", column " + std::to_string(c + 1));
}

/// Cluster label per sample.
using LabelSequence = std::vector<int>;

/// Relabels so that labels are 0..K-1 in order of first appearance.
inline LabelSequence canonicalize(const LabelSequence& labels) {
    LabelSequence out(labels.size());
    std::map<int, int> seen;  // original -> canonical
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto [it, inserted] = seen.try_emplace(labels[i], static_cast<int>(seen.size()));
        out[i] = it->second;
    }
    return out;
}

inline int count_labels(const LabelSequence& labels) {
    int k = 0;
    for (int l : canonicalize(labels)) k = std::max(k, l + 1);
    return k;
}

/// Contiguous run [start, start + length) of 1-based sample indexes.
struct Section {
    Index start = 1;
    Index length = 1;

    Index end() const { return start + length - 1; }  // inclusive
    bool operator==(const Section&) const = default;
};

struct PartitionSet {
    std::vector<Section> sections;

    Index total() const { return sections.empty() ? 0 : sections.back().end(); }
    std::vector<Index> lengths() const {
        std::vector<Index> out;
        out.reserve(sections.size());
        for (const auto& s : sections) out.push_back(s.length);
        return out;
    }
    bool operator==(const PartitionSet&) const = default;
};

/// Checks the disjoint, contiguous cover of [1, total].
inline void validate(const PartitionSet& partitions, Index total) {
    if (partitions.sections.empty()) throw ValidationError("partition set is empty");
    Index expected = 1;
    for (const auto& s : partitions.sections) {
        if (s.length < 1) throw ValidationError("partition with non-positive length");
        if (s.start != expected)
            throw ValidationError("partition starting at " + std::to_string(s.start) + ", expected " +
                                  std::to_string(expected));
        expected = s.start + s.length;
    }
    if (expected != total + 1) throw ValidationError("partitions do not cover the full sample range");
}

inline PartitionSet from_lengths(const std::vector<Index>& lengths) {
    PartitionSet out;
    Index start = 1;
    for (Index n : lengths) {
        out.sections.push_back({start, n});
        start += n;
    }
    return out;
}

/// Keyframes as 1-based sample indexes.
struct KeyframeSet {
    std::vector<std::vector<Index>> per_partition;
    std::vector<Index> all;  // sorted, unique
};

struct ImportanceCurve {
    std::vector<double> flat;      // per sample
    std::vector<double> final;     // per sample
    std::vector<double> per_frame;  // per original frame, empty until extrapolated
};

struct SummarySelection {
    std::vector<Index> selected_frames;  // sorted, 1-based
    std::vector<std::uint8_t> selection;  // length T
    Index budget_frames = 0;
};

inline SummarySelection selection_from_bits(std::vector<std::uint8_t> bits, Index budget) {
    SummarySelection out;
    out.selection = std::move(bits);
    out.budget_frames = budget;
    for (std::size_t i = 0; i < out.selection.size(); ++i)
        if (out.selection[i]) out.selected_frames.push_back(static_cast<Index>(i) + 1);
    return out;
}

}  // namespace vsumm
