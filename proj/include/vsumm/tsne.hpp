#pragma once

// Exact (dense, O(n^2)) t-SNE.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

struct TsneConfig {
    int output_dim = 2;
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch_iteration = 250;
    std::uint64_t seed = 0;
};

/// Perplexity actually used for `samples` points.
inline double effective_perplexity(double perplexity, Index samples) {
    return std::min(perplexity, static_cast<double>(samples - 1) / 3.0);
}

inline Matrix squared_distances(const Matrix& x) {
    const Index n = x.rows();
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).squaredNorm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

/**
 * Row-conditional Gaussian affinities P(j|i) whose perplexity exp(H(P_i)) matches
 * `perplexity`. The precision of every row is found by bisection on the entropy.
 */
inline Matrix conditional_affinities(const Matrix& sq_dist, double perplexity) {
    const Index n = sq_dist.rows();
    const double target = std::log(perplexity);
    Matrix p = Matrix::Zero(n, n);
    std::vector<double> shifted(static_cast<std::size_t>(n));

    for (Index i = 0; i < n; ++i) {
        // Shifting by the nearest distance leaves P(.|i) unchanged and keeps exp() finite.
        double nearest = std::numeric_limits<double>::infinity();
        double mean = 0.0;
        for (Index j = 0; j < n; ++j)
            if (j != i) nearest = std::min(nearest, sq_dist(i, j));
        for (Index j = 0; j < n; ++j) {
            shifted[static_cast<std::size_t>(j)] = j == i ? 0.0 : sq_dist(i, j) - nearest;
            mean += shifted[static_cast<std::size_t>(j)];
        }
        mean /= static_cast<double>(n - 1);

        auto entropy_at = [&](double beta, bool store) {
            double sum = 0.0;
            double weighted = 0.0;
            for (Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double s = shifted[static_cast<std::size_t>(j)];
                const double w = std::exp(-beta * s);
                sum += w;
                weighted += w * s;
                if (store) p(i, j) = w;
            }
            if (store) p.row(i) /= sum;
            return std::log(sum) + beta * weighted / sum;
        };

        double beta = mean > 0.0 ? 1.0 / mean : 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 2000; ++iter) {
            const double h = entropy_at(beta, false);
            if (std::abs(h - target) < 1e-12) break;
            if (h > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
            if (!std::isfinite(beta) || beta == lo || beta == hi) break;
        }
        if (!std::isfinite(beta)) beta = lo;
        entropy_at(beta, true);
    }
    return p;
}

/// Symmetrized joint distribution (P + P^T) / 2n.
inline Matrix joint_affinities(const Matrix& conditional) {
    const double n = static_cast<double>(conditional.rows());
    return (conditional + conditional.transpose()) / (2.0 * n);
}

/// Student-t similarities Q for a low-dimensional layout.
inline Matrix student_t_affinities(const Matrix& y) {
    const Index n = y.rows();
    Matrix q = Matrix::Zero(n, n);
    double sum = 0.0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            const double w = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
            q(i, j) = w;
            q(j, i) = w;
            sum += 2.0 * w;
        }
    return q / sum;
}

inline double kl_divergence(const Matrix& p, const Matrix& q) {
    double kl = 0.0;
    for (Index i = 0; i < p.rows(); ++i)
        for (Index j = 0; j < p.cols(); ++j)
            if (i != j && p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), 1e-300));
    return kl;
}

struct TsneResult {
    Matrix embedding;
    double perplexity = 0.0;  // effective
    double initial_kl = 0.0;
    double final_kl = 0.0;
};

inline TsneResult tsne(const Matrix& data, const TsneConfig& cfg) {
    const Index n = data.rows();
    if (n < 4) throw ValidationError("t-SNE: needs at least 4 samples, got " + std::to_string(n));
    if (cfg.output_dim != 2 && cfg.output_dim != 3) throw ValidationError("t-SNE: output dimension must be 2 or 3");
    if (!(cfg.perplexity > 0.0) || cfg.iterations < 1 || !(cfg.learning_rate > 0.0) || cfg.exaggeration < 1.0 ||
        cfg.exaggeration_iterations < 0)
        throw ValidationError("t-SNE: invalid configuration");
    for (Index i = 0; i < data.size(); ++i)
        if (!std::isfinite(data.data()[i])) throw ValidationError("t-SNE: non-finite input");

    const Matrix dist = squared_distances(data);
    if (dist.maxCoeff() <= 0.0) throw ValidationError("t-SNE: degenerate input, all points identical");

    TsneResult result;
    result.perplexity = effective_perplexity(cfg.perplexity, n);
    const Matrix p = joint_affinities(conditional_affinities(dist, result.perplexity));

    const int dims = cfg.output_dim;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1e-4);
    Matrix y(n, dims);
    for (Index i = 0; i < n; ++i)
        for (int c = 0; c < dims; ++c) y(i, c) = normal(rng);
    result.initial_kl = kl_divergence(p, student_t_affinities(y));

    Matrix update = Matrix::Zero(n, dims);
    Matrix gains = Matrix::Ones(n, dims);
    Matrix grad(n, dims);
    Matrix num(n, n);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const double exaggeration = iter < cfg.exaggeration_iterations ? cfg.exaggeration : 1.0;
        const double momentum = iter < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;

        double sum = 0.0;
        for (Index i = 0; i < n; ++i) {
            num(i, i) = 0.0;
            for (Index j = i + 1; j < n; ++j) {
                const double w = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
                num(i, j) = w;
                num(j, i) = w;
                sum += 2.0 * w;
            }
        }
        grad.setZero();
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) {
                if (i == j) continue;
                const double coeff = 4.0 * (exaggeration * p(i, j) - num(i, j) / sum) * num(i, j);
                grad.row(i) += coeff * (y.row(i) - y.row(j));
            }

        for (Index i = 0; i < n; ++i)
            for (int c = 0; c < dims; ++c) {
                const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
                gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
                gains(i, c) = std::max(gains(i, c), 0.01);
                update(i, c) = momentum * update(i, c) - cfg.learning_rate * gains(i, c) * grad(i, c);
                y(i, c) += update(i, c);
            }
        y.rowwise() -= y.colwise().mean();
    }
    result.final_kl = kl_divergence(p, student_t_affinities(y));
    result.embedding = std::move(y);
    return result;
}

}  // namespace vsumm
