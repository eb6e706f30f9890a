#pragma once

#include <algorithm>
#include <iterator>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

/**
 * Mode filter over a window of W samples centred on each sample. The window is
 * clipped at the sequence ends. On a tie the sample keeps its own label when
 * it is one of the modes, else the smallest tied label wins.
 */
inline LabelSequence smooth_labels(const LabelSequence& labels, int window) {
    if (window < 1 || window % 2 == 0) throw ValidationError("smoothing window must be odd and >= 1, got " + std::to_string(window));
    const auto n = static_cast<std::ptrdiff_t>(labels.size());
    const std::ptrdiff_t half = (window - 1) / 2;
    LabelSequence out(labels.size());
    std::map<int, int> counts;
    // Sliding histogram: window for i is [i - half, i + half] clipped.
    for (std::ptrdiff_t j = 0; j < std::min(n, half); ++j) ++counts[labels[static_cast<std::size_t>(j)]];
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t enter = i + half;
        const std::ptrdiff_t leave = i - half - 1;
        if (enter < n) ++counts[labels[static_cast<std::size_t>(enter)]];
        if (leave >= 0) {
            auto it = counts.find(labels[static_cast<std::size_t>(leave)]);
            if (--it->second == 0) counts.erase(it);
        }
        int best_count = 0;
        for (const auto& [label, c] : counts) best_count = std::max(best_count, c);
        const int own = labels[static_cast<std::size_t>(i)];
        if (counts[own] == best_count) {
            out[static_cast<std::size_t>(i)] = own;
            continue;
        }
        for (const auto& [label, c] : counts)
            if (c == best_count) {
                out[static_cast<std::size_t>(i)] = label;
                break;
            }
    }
    return out;
}

/// Maximal runs of equal labels.
inline PartitionSet init_partitions(const LabelSequence& labels) {
    if (labels.empty()) throw ValidationError("cannot partition an empty label sequence");
    PartitionSet out;
    Index start = 1;
    for (std::size_t i = 1; i <= labels.size(); ++i) {
        if (i == labels.size() || labels[i] != labels[i - 1]) {
            const Index end = static_cast<Index>(i);
            out.sections.push_back({start, end - start + 1});
            start = end + 1;
        }
    }
    return out;
}

/**
 * Absorbs sections shorter than `min_length` into their neighbours, always
 * taking the shortest (leftmost on ties) first. The first section goes to
 * its successor, the last to its predecessor; an inner section is split with
 * the left neighbour taking ceil(N/2) samples.
 *
 * Sections live in a linked list keyed by start; an ordered set over
 * (length, start) yields the shortest in O(log n).
 */
inline PartitionSet refine_partitions(const PartitionSet& input, Index min_length) {
    if (input.sections.empty()) return input;
    validate(input, input.total());

    struct Node {
        Index start, length;
        int prev, next;
    };
    std::vector<Node> nodes;
    nodes.reserve(input.sections.size());
    for (std::size_t i = 0; i < input.sections.size(); ++i)
        nodes.push_back({input.sections[i].start, input.sections[i].length, static_cast<int>(i) - 1,
                         i + 1 < input.sections.size() ? static_cast<int>(i) + 1 : -1});

    // Positional order equals start order, so (length, start) breaks ties by index.
    std::set<std::tuple<Index, Index, int>> by_length;
    for (std::size_t i = 0; i < nodes.size(); ++i) by_length.insert({nodes[i].length, nodes[i].start, static_cast<int>(i)});
    std::size_t alive = nodes.size();

    auto resize = [&](int id, Index new_start, Index new_length) {
        by_length.erase({nodes[static_cast<std::size_t>(id)].length, nodes[static_cast<std::size_t>(id)].start, id});
        nodes[static_cast<std::size_t>(id)].start = new_start;
        nodes[static_cast<std::size_t>(id)].length = new_length;
        by_length.insert({new_length, new_start, id});
    };

    while (alive > 1) {
        const auto [len, start, id] = *by_length.begin();
        if (len >= min_length) break;
        by_length.erase(by_length.begin());
        Node& cur = nodes[static_cast<std::size_t>(id)];
        const int prev = cur.prev;
        const int next = cur.next;
        if (prev < 0) {
            auto& succ = nodes[static_cast<std::size_t>(next)];
            resize(next, cur.start, succ.length + len);
        } else if (next < 0) {
            auto& pred = nodes[static_cast<std::size_t>(prev)];
            resize(prev, pred.start, pred.length + len);
        } else {
            const Index left = (len + 1) / 2;
            const Index right = len - left;
            auto& pred = nodes[static_cast<std::size_t>(prev)];
            auto& succ = nodes[static_cast<std::size_t>(next)];
            resize(prev, pred.start, pred.length + left);
            resize(next, succ.start - right, succ.length + right);
        }
        if (prev >= 0) nodes[static_cast<std::size_t>(prev)].next = next;
        if (next >= 0) nodes[static_cast<std::size_t>(next)].prev = prev;
        --alive;
    }

    PartitionSet out;
    int head = -1;
    for (const auto& [len, start, id] : by_length)
        if (nodes[static_cast<std::size_t>(id)].prev < 0) head = id;
    for (int id = head; id >= 0; id = nodes[static_cast<std::size_t>(id)].next)
        out.sections.push_back({nodes[static_cast<std::size_t>(id)].start, nodes[static_cast<std::size_t>(id)].length});
    return out;
}

/// smooth -> run-length -> refine.
inline PartitionSet partition_labels(const LabelSequence& fine, int window, Index min_length) {
    return refine_partitions(init_partitions(smooth_labels(fine, window)), min_length);
}

}  // namespace vsumm
