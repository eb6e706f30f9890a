#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "types.hpp"

namespace vsumm {

/**
 * Linear projection onto the leading eigenvectors of the sample covariance.
 *
 * Eigenvectors are sign-normalized so that the entry with the largest magnitude
 * is positive (first such entry on ties), which makes the projection
 * reproducible across runs and platforms.
 */
struct PcaModel {
    Eigen::VectorXd mean;                // D
    Matrix components;                   // D x D', orthonormal columns
    Eigen::VectorXd explained_variance;  // D', non-increasing
    Eigen::VectorXd eigenvalues;         // all D covariance eigenvalues, non-increasing

    Index input_dim() const { return components.rows(); }
    Index output_dim() const { return components.cols(); }

    /// Sum of the covariance eigenvalues not kept by the projection.
    double discarded_variance() const {
        double sum = 0.0;
        for (Index i = output_dim(); i < eigenvalues.size(); ++i) sum += eigenvalues(i);
        return sum;
    }

    Matrix transform(const Matrix& data) const {
        if (data.cols() != input_dim()) throw ValidationError("pca: input dimension mismatch");
        return (data.rowwise() - mean.transpose()) * components;
    }

    Matrix inverse_transform(const Matrix& projected) const {
        return (projected * components.transpose()).rowwise() + mean.transpose();
    }
};

struct PcaResult {
    PcaModel model;
    Matrix projected;  // T x D'
};

inline PcaResult pca_fit_transform(const Matrix& data, Index target_dim) {
    const Index n = data.rows();
    const Index d = data.cols();
    if (n < 1 || d < 1) throw ValidationError("pca: empty input");
    if (target_dim < 1 || target_dim > std::min(n, d))
        throw ValidationError("pca: target dimension " + std::to_string(target_dim) + " outside [1, " +
                              std::to_string(std::min(n, d)) + "]");

    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - model.mean.transpose();
    const double denom = static_cast<double>(std::max<Index>(n - 1, 1));
    const Matrix covariance = (centered.transpose() * centered) / denom;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance);
    if (solver.info() != Eigen::Success) throw Error("pca: eigendecomposition failed");

    // Eigen sorts ascending.
    model.eigenvalues.resize(d);
    for (Index i = 0; i < d; ++i) model.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(d - 1 - i));
    model.components.resize(d, target_dim);
    for (Index k = 0; k < target_dim; ++k) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
        Index pivot = 0;
        for (Index i = 1; i < d; ++i)
            if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
        if (v(pivot) < 0) v = -v;
        model.components.col(k) = v;
    }
    model.explained_variance = model.eigenvalues.head(target_dim);

    PcaResult result{model, centered * model.components};
    return result;
}

}  // namespace vsumm
