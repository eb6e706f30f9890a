#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

enum class DistanceKind { Euclidean, Cosine };

inline DistanceKind parse_distance(const std::string& name) {
    if (name == "euclidean") return DistanceKind::Euclidean;
    if (name == "cosine") return DistanceKind::Cosine;
    throw ValidationError("unknown distance '" + name + "' (accepted: euclidean, cosine)");
}

inline std::string to_string(DistanceKind kind) { return kind == DistanceKind::Euclidean ? "euclidean" : "cosine"; }

/// Euclidean L2, or cosine distance 1 - cos(a, b). A zero vector is at cosine
/// distance 1 from any non-zero vector and 0 from another zero vector.
template <typename A, typename B>
double distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, DistanceKind kind) {
    if (kind == DistanceKind::Euclidean) return (a - b).norm();
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
    return 1.0 - a.dot(b) / (na * nb);
}

}  // namespace vsumm
