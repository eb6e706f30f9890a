#pragma once

// Coarse-to-fine contextual clustering: BIRCH subclusters become atoms that
// are merged agglomeratively until the target cluster count is reached.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "birch.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

/// Number of fine clusters for a summary of `target_frames` frames:
/// the positive branch of a sigmoid, max_clusters * tanh(modulation * L' / 2),
/// rounded and clamped to [1, max_clusters].
inline int cluster_count(int max_clusters, double modulation, double target_frames) {
    if (max_clusters < 1) throw ValidationError("cluster count: max clusters must be >= 1");
    if (!(modulation > 0.0)) throw ValidationError("cluster count: modulation must be positive");
    const double raw = static_cast<double>(max_clusters) * std::tanh(modulation * std::max(0.0, target_frames) / 2.0);
    const auto k = static_cast<int>(std::lround(raw));
    return std::clamp(k, 1, max_clusters);
}

enum class Linkage { Single, Complete, Average };

inline Linkage parse_linkage(const std::string& name) {
    if (name == "single") return Linkage::Single;
    if (name == "complete") return Linkage::Complete;
    if (name == "average") return Linkage::Average;
    throw ValidationError("unknown linkage '" + name + "' (accepted: single, complete, average)");
}

inline std::string to_string(Linkage l) {
    switch (l) {
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
    }
    return "average";
}

struct Merge {
    int kept = 0;     // smaller atom id, survives
    int absorbed = 0;
    double affinity = 0.0;
};

struct AgglomerativeResult {
    LabelSequence labels;  // canonical, first appearance
    int clusters = 0;
    std::vector<Merge> merges;
};

/**
 * Merges coarse clusters (atoms) pairwise by minimal linkage until
 * max(1, min(target, atoms)) clusters remain. Points sharing a coarse label
 * always share a fine label. Equal affinities merge the lexicographically
 * smallest (first, second) atom pair.
 */
inline AgglomerativeResult agglomerative_fine(const Matrix& points, const LabelSequence& coarse, int target,
                                              Linkage linkage, DistanceKind metric) {
    const Index n = points.rows();
    if (static_cast<Index>(coarse.size()) != n)
        throw ValidationError("agglomerative: coarse label count " + std::to_string(coarse.size()) +
                              " does not match sample count " + std::to_string(n));
    if (target < 1) throw ValidationError("agglomerative: target cluster count must be >= 1");

    const LabelSequence atoms_of = canonicalize(coarse);
    const int atoms = count_labels(atoms_of);
    std::vector<double> size(static_cast<std::size_t>(atoms), 0.0);
    for (int a : atoms_of) size[static_cast<std::size_t>(a)] += 1.0;

    // Atom-level linkage from member points.
    const auto idx = [atoms](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(atoms) + static_cast<std::size_t>(j); };
    std::vector<double> affinity(static_cast<std::size_t>(atoms) * static_cast<std::size_t>(atoms));
    if (linkage == Linkage::Single)
        std::fill(affinity.begin(), affinity.end(), std::numeric_limits<double>::infinity());
    else
        std::fill(affinity.begin(), affinity.end(), 0.0);
    for (Index p = 0; p < n; ++p)
        for (Index q = p + 1; q < n; ++q) {
            int a = atoms_of[static_cast<std::size_t>(p)];
            int b = atoms_of[static_cast<std::size_t>(q)];
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            const double d = distance(points.row(p), points.row(q), metric);
            double& cell = affinity[idx(a, b)];
            switch (linkage) {
                case Linkage::Single: cell = std::min(cell, d); break;
                case Linkage::Complete: cell = std::max(cell, d); break;
                case Linkage::Average: cell += d; break;
            }
        }
    for (int a = 0; a < atoms; ++a)
        for (int b = a + 1; b < atoms; ++b) {
            if (linkage == Linkage::Average) affinity[idx(a, b)] /= size[static_cast<std::size_t>(a)] * size[static_cast<std::size_t>(b)];
            affinity[idx(b, a)] = affinity[idx(a, b)];
        }

    AgglomerativeResult result;
    std::vector<int> parent(static_cast<std::size_t>(atoms));
    for (int a = 0; a < atoms; ++a) parent[static_cast<std::size_t>(a)] = a;
    std::vector<bool> active(static_cast<std::size_t>(atoms), true);
    int remaining = atoms;
    const int goal = std::max(1, std::min(target, atoms));

    while (remaining > goal) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < atoms; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < atoms; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (bi < 0 || affinity[idx(i, j)] < best) {
                    best = affinity[idx(i, j)];
                    bi = i;
                    bj = j;
                }
            }
        }
        // Lance-Williams updates; exact for these three linkages.
        const double si = size[static_cast<std::size_t>(bi)];
        const double sj = size[static_cast<std::size_t>(bj)];
        for (int k = 0; k < atoms; ++k) {
            if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
            const double dik = affinity[idx(bi, k)];
            const double djk = affinity[idx(bj, k)];
            double merged = 0.0;
            switch (linkage) {
                case Linkage::Single: merged = std::min(dik, djk); break;
                case Linkage::Complete: merged = std::max(dik, djk); break;
                case Linkage::Average: merged = (si * dik + sj * djk) / (si + sj); break;
            }
            affinity[idx(bi, k)] = merged;
            affinity[idx(k, bi)] = merged;
        }
        size[static_cast<std::size_t>(bi)] = si + sj;
        active[static_cast<std::size_t>(bj)] = false;
        parent[static_cast<std::size_t>(bj)] = bi;
        result.merges.push_back({bi, bj, best});
        --remaining;
    }

    auto root = [&parent](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)];
        return a;
    };
    LabelSequence raw(static_cast<std::size_t>(n));
    for (Index p = 0; p < n; ++p) raw[static_cast<std::size_t>(p)] = root(atoms_of[static_cast<std::size_t>(p)]);
    result.labels = canonicalize(raw);
    result.clusters = count_labels(result.labels);
    return result;
}

struct ClusteringConfig {
    int max_clusters = 60;
    double modulation = 1e-3;
    std::optional<double> birch_threshold = 0.5;  // absolute; unset -> scale * median pairwise distance
    double birch_threshold_scale = 0.5;
    int birch_branching = 50;
    Linkage linkage = Linkage::Average;
    DistanceKind distance = DistanceKind::Euclidean;
};

struct ContextClusters {
    LabelSequence coarse;
    LabelSequence fine;
    int coarse_count = 0;
    int target = 0;
    double threshold = 0.0;
};

inline ContextClusters cluster_context(const Matrix& reduced, double target_frames, const ClusteringConfig& cfg) {
    ContextClusters out;
    out.threshold = cfg.birch_threshold ? *cfg.birch_threshold
                                        : birch_default_threshold(reduced, cfg.birch_threshold_scale);
    const auto coarse = birch_coarse(reduced, {out.threshold, cfg.birch_branching});
    out.coarse = coarse.labels;
    out.coarse_count = coarse.clusters;
    out.target = cluster_count(cfg.max_clusters, cfg.modulation, target_frames);
    out.fine = agglomerative_fine(reduced, coarse.labels, out.target, cfg.linkage, cfg.distance).labels;
    return out;
}

}  // namespace vsumm
