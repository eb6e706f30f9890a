#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "manifest.hpp"
#include "summary.hpp"
#include "types.hpp"

namespace vsumm {

struct Confusion {
    Index tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Frame sets are sorted, duplicate-free, 1-based.
inline Confusion confusion(const std::vector<Index>& predicted, const std::vector<Index>& truth, Index total) {
    for (const auto* set : {&predicted, &truth})
        for (std::size_t i = 0; i < set->size(); ++i) {
            const Index f = (*set)[i];
            if (f < 1 || f > total) throw ValidationError("frame " + std::to_string(f) + " outside [1, " + std::to_string(total) + "]");
            if (i > 0 && f <= (*set)[i - 1]) throw ValidationError("frame set must be sorted and duplicate-free");
        }
    Confusion c;
    std::size_t i = 0, j = 0;
    while (i < predicted.size() && j < truth.size()) {
        if (predicted[i] == truth[j]) {
            ++c.tp;
            ++i;
            ++j;
        } else if (predicted[i] < truth[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    c.fp = static_cast<Index>(predicted.size()) - c.tp;
    c.fn = static_cast<Index>(truth.size()) - c.tp;
    c.tn = total - c.tp - c.fp - c.fn;
    return c;
}

/// Harmonic mean of precision and recall; 0 when nothing overlaps.
inline double f_measure(const std::vector<Index>& predicted, const std::vector<Index>& truth, Index total) {
    const auto c = confusion(predicted, truth, total);
    if (c.tp == 0) return 0.0;
    const double p = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    const double r = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return 2.0 * p * r / (p + r);
}

enum class UserAggregate { Avg, Max };

inline double video_score(const std::vector<Index>& predicted, const std::vector<std::vector<Index>>& users, Index total,
                          UserAggregate mode) {
    if (users.empty()) throw ValidationError("video score: no user summaries");
    double sum = 0.0, best = 0.0;
    for (const auto& u : users) {
        const double f = f_measure(predicted, u, total);
        sum += f;
        best = std::max(best, f);
    }
    return mode == UserAggregate::Avg ? sum / static_cast<double>(users.size()) : best;
}

enum class DatasetAggregate { Avg, Max, Top5 };

inline double dataset_score(std::vector<double> scores, DatasetAggregate mode) {
    if (scores.empty()) throw ValidationError("dataset score: no videos");
    switch (mode) {
        case DatasetAggregate::Avg:
            return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
        case DatasetAggregate::Max:
            return *std::max_element(scores.begin(), scores.end());
        case DatasetAggregate::Top5: {
            std::sort(scores.begin(), scores.end(), std::greater<>());
            const std::size_t k = std::min<std::size_t>(5, scores.size());
            return std::accumulate(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
        }
    }
    return 0.0;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;  // sorted
};

/// M seeded shuffles of 0..n-1; the first round(fraction * n) become the test set.
inline std::vector<Split> make_splits(std::size_t videos, int count, double test_fraction, std::uint64_t seed) {
    if (count < 1) throw ValidationError("splits: count must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("splits: test fraction must lie in (0, 1)");
    const auto test_size = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(videos)));
    if (test_size == 0) throw ValidationError("splits: test set would be empty");
    std::mt19937_64 rng(seed);
    std::vector<Split> out;
    for (int m = 0; m < count; ++m) {
        std::vector<std::size_t> order(videos);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = videos; i-- > 1;) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
        Split s;
        s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
        s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
        std::sort(s.test.begin(), s.test.end());
        std::sort(s.train.begin(), s.train.end());
        out.push_back(std::move(s));
    }
    return out;
}

/// Mean over each split's test videos.
inline std::vector<double> split_scores(const std::vector<double>& per_video, const std::vector<Split>& splits) {
    std::vector<double> out;
    for (const auto& s : splits) {
        double sum = 0.0;
        for (std::size_t i : s.test) {
            if (i >= per_video.size()) throw ValidationError("split references a missing video");
            sum += per_video[i];
        }
        out.push_back(sum / static_cast<double>(s.test.size()));
    }
    return out;
}

/// Stable 64-bit FNV-1a, used to derive per-video seeds.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& label) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(label)), static_cast<std::uint32_t>(fnv1a(label) >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

struct BaselineScore {
    double avg = 0.0;  // mean over repeats of the user-averaged f
    double max = 0.0;  // mean over repeats of the best-user f
    Index budget = 0;
    int repeats = 0;
};

/// Random summarizer: uniform per-frame scores, knapsack at the budget, scored against users.
inline BaselineScore random_baseline(const ManifestVideo& video, int repeats, std::uint64_t seed, double budget_fraction = 0.15) {
    if (repeats < 1) throw ValidationError("baseline: repeats must be >= 1");
    const Index total = video.meta.total_frames;
    BaselineScore out;
    out.budget = evaluation_budget(total, budget_fraction);
    out.repeats = repeats;
    std::mt19937_64 rng(seed);
    std::vector<double> scores(static_cast<std::size_t>(total));
    for (int r = 0; r < repeats; ++r) {
        for (double& s : scores) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const auto pick = knapsack_summary(scores, video.segments, out.budget);
        if (static_cast<Index>(pick.selected_frames.size()) > out.budget) throw Error("baseline exceeded its budget");
        out.avg += video_score(pick.selected_frames, video.user_summaries, total, UserAggregate::Avg);
        out.max += video_score(pick.selected_frames, video.user_summaries, total, UserAggregate::Max);
    }
    out.avg /= repeats;
    out.max /= repeats;
    return out;
}

}  // namespace vsumm
