#pragma once

// BIRCH coarse clustering over a clustering-feature (CF) tree.
//
// Every leaf entry is a subcluster; a point is absorbed by the closest leaf
// subcluster when the merged radius stays within the threshold, otherwise it
// opens a new one. Nodes holding more than `branching` entries split around
// their two farthest entries. There is no global clustering pass: each leaf
// subcluster is one coarse cluster.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

struct BirchConfig {
    double threshold = 0.5;
    int branching = 50;
};

struct BirchResult {
    LabelSequence labels;  // canonical, first appearance
    int clusters = 0;
    double threshold = 0.0;
};

/// threshold = scale * median pairwise euclidean distance over an evenly strided
/// subsample of at most `max_points` rows.
inline double birch_default_threshold(const Matrix& points, double scale = 0.5, Index max_points = 256) {
    const Index n = points.rows();
    if (n < 2) return 0.0;
    const Index m = std::min(n, max_points);
    std::vector<Index> rows;
    for (Index i = 0; i < m; ++i) rows.push_back(i * n / m);
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) d.push_back((points.row(rows[i]) - points.row(rows[j])).norm());
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double median = d[mid];
    if (d.size() % 2 == 0) {
        const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
        median = (median + lower) / 2.0;
    }
    return scale * median;
}

namespace detail {

struct ClusteringFeature {
    Index count = 0;
    Eigen::VectorXd linear_sum;
    double square_sum = 0.0;

    static ClusteringFeature of_point(const Eigen::VectorXd& x) { return {1, x, x.squaredNorm()}; }

    void add(const ClusteringFeature& other) {
        if (count == 0) {
            *this = other;
            return;
        }
        count += other.count;
        linear_sum += other.linear_sum;
        square_sum += other.square_sum;
    }

    Eigen::VectorXd centroid() const { return linear_sum / static_cast<double>(count); }

    /// Squared radius of the union with `other`, plus a rounding allowance.
    std::pair<double, double> merged_radius_sq(const ClusteringFeature& other) const {
        const double n = static_cast<double>(count + other.count);
        const double ss = (square_sum + other.square_sum) / n;
        const double cc = ((linear_sum + other.linear_sum) / n).squaredNorm();
        return {std::max(0.0, ss - cc), 1e-12 * std::max(1.0, ss)};
    }
};

struct CfNode;

struct CfEntry {
    ClusteringFeature cf;
    std::unique_ptr<CfNode> child;
    int subcluster = -1;
};

struct CfNode {
    bool leaf = true;
    std::vector<CfEntry> entries;
};

using NodePair = std::pair<std::unique_ptr<CfNode>, std::unique_ptr<CfNode>>;

class CfTree {
public:
    CfTree(double threshold, int branching) : threshold_(threshold), branching_(branching) {
        root_ = std::make_unique<CfNode>();
    }

    /// Returns the subcluster id that absorbed the point.
    int insert(const Eigen::VectorXd& x) {
        int assigned = -1;
        const auto point = ClusteringFeature::of_point(x);
        if (auto split = insert_into(*root_, point, assigned)) {
            auto root = std::make_unique<CfNode>();
            root->leaf = false;
            root->entries.push_back(entry_for(std::move(split->first)));
            root->entries.push_back(entry_for(std::move(split->second)));
            root_ = std::move(root);
        }
        return assigned;
    }

    int subclusters() const { return next_id_; }

private:
    static CfEntry entry_for(std::unique_ptr<CfNode> node) {
        CfEntry e;
        for (const auto& child : node->entries) e.cf.add(child.cf);
        e.child = std::move(node);
        return e;
    }

    static std::size_t closest(const CfNode& node, const Eigen::VectorXd& x) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < node.entries.size(); ++i) {
            const double d = (node.entries[i].cf.centroid() - x).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    std::optional<NodePair> insert_into(CfNode& node, const ClusteringFeature& point, int& assigned) {
        if (node.leaf) {
            bool absorbed = false;
            if (!node.entries.empty()) {
                auto& target = node.entries[closest(node, point.linear_sum)];
                const auto [r2, slack] = target.cf.merged_radius_sq(point);
                if (r2 <= threshold_ * threshold_ + slack) {
                    target.cf.add(point);
                    assigned = target.subcluster;
                    absorbed = true;
                }
            }
            if (!absorbed) {
                CfEntry e;
                e.cf = point;
                e.subcluster = next_id_++;
                assigned = e.subcluster;
                node.entries.push_back(std::move(e));
            }
        } else {
            const std::size_t idx = closest(node, point.linear_sum);
            auto split = insert_into(*node.entries[idx].child, point, assigned);
            if (!split) {
                node.entries[idx].cf.add(point);
            } else {
                node.entries[idx] = entry_for(std::move(split->first));
                node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                                    entry_for(std::move(split->second)));
            }
        }
        if (static_cast<int>(node.entries.size()) > branching_) return split_node(node);
        return std::nullopt;
    }

    static NodePair split_node(CfNode& node) {
        const std::size_t n = node.entries.size();
        std::vector<Eigen::VectorXd> centroids;
        for (const auto& e : node.entries) centroids.push_back(e.cf.centroid());
        std::size_t s1 = 0, s2 = 1;
        double far = -1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = (centroids[i] - centroids[j]).squaredNorm();
                if (d > far) {
                    far = d;
                    s1 = i;
                    s2 = j;
                }
            }
        auto a = std::make_unique<CfNode>();
        auto b = std::make_unique<CfNode>();
        a->leaf = b->leaf = node.leaf;
        for (std::size_t i = 0; i < n; ++i) {
            const bool to_a = i == s1 || (i != s2 && (centroids[i] - centroids[s1]).squaredNorm() <=
                                                         (centroids[i] - centroids[s2]).squaredNorm());
            (to_a ? a : b)->entries.push_back(std::move(node.entries[i]));
        }
        node.entries.clear();
        return {std::move(a), std::move(b)};
    }

    double threshold_;
    int branching_;
    int next_id_ = 0;
    std::unique_ptr<CfNode> root_;
};

}  // namespace detail

inline BirchResult birch_coarse(const Matrix& points, const BirchConfig& cfg) {
    if (points.rows() < 1) throw ValidationError("birch: no points");
    if (!(cfg.threshold >= 0.0) || cfg.branching < 2) throw ValidationError("birch: invalid configuration");
    for (Index i = 0; i < points.size(); ++i)
        if (!std::isfinite(points.data()[i])) throw ValidationError("birch: non-finite input");

    detail::CfTree tree(cfg.threshold, cfg.branching);
    LabelSequence raw(static_cast<std::size_t>(points.rows()));
    for (Index i = 0; i < points.rows(); ++i) raw[static_cast<std::size_t>(i)] = tree.insert(points.row(i).transpose());

    BirchResult result;
    result.labels = canonicalize(raw);
    result.clusters = count_labels(result.labels);
    result.threshold = cfg.threshold;
    return result;
}

}  // namespace vsumm
