#pragma once

// Small dense symmetric positive-definite helpers: Sherman-Morrison inverse maintenance,
// matrix-weighted norms, and Euclidean-ball projection under an H-norm.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "glb/errors.hpp"

namespace glb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// sqrt(v^T M v), with negative rounding clamped to zero.
inline double weighted_norm(const Vector& v, const Matrix& M)
{
    if (M.rows() != M.cols() || M.rows() != v.size())
        throw ContractViolation("weighted_norm: dimension mismatch");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw ContractViolation("weighted_norm: matrix is not symmetric");
    const double q = v.dot(M * v);
    return std::sqrt(std::max(q, 0.0));
}

/// (A + c v v^T)^{-1} from A^{-1}, in O(d^2).
inline Matrix sherman_morrison(const Matrix& inverse, const Vector& v, double c)
{
    const Vector Av = inverse * v;
    const double denom = 1.0 / c + v.dot(Av);
    Matrix out = inverse - (Av * Av.transpose()) / denom;
    symmetrize(out);
    return out;
}

/// Keeps a symmetric PD matrix and its inverse in step under rank-1 growth A += c v v^T.
/// The inverse is rebuilt from a Cholesky factorization every `refresh_every` updates.
class InverseTracker {
public:
    static constexpr std::size_t kDefaultRefresh = 512;

    explicit InverseTracker(Matrix initial, std::size_t refresh_every = kDefaultRefresh)
        : matrix_(std::move(initial))
        , refresh_every_(refresh_every == 0 ? kDefaultRefresh : refresh_every)
    {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0)
            throw ContractViolation("InverseTracker: matrix must be square and non-empty");
        symmetrize(matrix_);
        refactor();
    }

    static InverseTracker scaled_identity(Eigen::Index d, double lambda,
                                          std::size_t refresh_every = kDefaultRefresh)
    {
        if (!(lambda > 0.0)) throw ConfigError("regularizer must be positive");
        return InverseTracker(lambda * Matrix::Identity(d, d), refresh_every);
    }

    void rank1_update(const Vector& v, double c)
    {
        if (!(c > 0.0) || !std::isfinite(c))
            throw ContractViolation("rank1_update: coefficient must be positive and finite");
        if (v.size() != matrix_.rows()) throw ContractViolation("rank1_update: dimension mismatch");
        if (!v.allFinite()) throw ContractViolation("rank1_update: non-finite vector");

        inverse_ = sherman_morrison(inverse_, v, c);
        matrix_.noalias() += c * v * v.transpose();
        symmetrize(matrix_);
        ++update_count_;
        if (update_count_ % refresh_every_ == 0) refactor();
    }

    /// Recomputes the inverse from scratch. Throws NumericError if the matrix lost definiteness.
    void refactor()
    {
        Eigen::LLT<Matrix> llt(matrix_);
        if (llt.info() != Eigen::Success)
            throw NumericError("InverseTracker: matrix is not positive definite");
        inverse_ = llt.solve(Matrix::Identity(matrix_.rows(), matrix_.cols()));
        symmetrize(inverse_);
    }

    /// max |A A^{-1} - I|.
    [[nodiscard]] double consistency_error() const
    {
        return (matrix_ * inverse_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff();
    }

    [[nodiscard]] const Matrix& matrix() const noexcept { return matrix_; }
    [[nodiscard]] const Matrix& inverse() const noexcept { return inverse_; }
    [[nodiscard]] std::size_t update_count() const noexcept { return update_count_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return matrix_.rows(); }

private:
    Matrix matrix_;
    Matrix inverse_;
    std::size_t update_count_ = 0;
    std::size_t refresh_every_;
};

struct BallProjection {
    Vector theta;
    /// Multiplier of the norm constraint; zero for interior inputs.
    double nu = 0.0;
};

/// argmin_{||theta||_2 <= S} ||theta - zeta||_H^2.
///
/// Exterior points are mapped to theta(nu) = (H + nu I)^{-1} H zeta, where nu is the root of
/// ||theta(nu)||_2 = S. H is diagonalized once; ||theta(nu)|| is strictly decreasing in nu, so the
/// root is bracketed by doubling and then bisected. The upper end of the bracket is returned, which
/// keeps the result inside the ball.
inline BallProjection project_onto_ball(const Vector& zeta, const Matrix& H, double S)
{
    if (!(S > 0.0)) throw ConfigError("ball radius must be positive");
    if (H.rows() != H.cols() || H.rows() != zeta.size())
        throw ContractViolation("project_onto_ball: dimension mismatch");
    if (zeta.norm() <= S) return {zeta, 0.0};

    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    if (eig.info() != Eigen::Success) throw NumericError("project_onto_ball: eigendecomposition failed");
    const Vector& ev = eig.eigenvalues();
    if (!(ev.minCoeff() > 0.0)) throw NumericError("project_onto_ball: H is not positive definite");

    const Vector w = (eig.eigenvectors().transpose() * zeta).cwiseProduct(ev);
    auto norm_at = [&](double nu) {
        return (w.array() / (ev.array() + nu)).matrix().norm();
    };

    double lo = 0.0;
    double hi = std::max(ev.maxCoeff(), 1.0);
    while (norm_at(hi) >= S) {
        lo = hi;
        hi *= 2.0;
    }
    // Bisect to the nu tolerance, then keep going while the norm is still visibly short of S.
    const double norm_tol = 1e-11 * std::max(1.0, S);
    for (int iter = 0; iter < 2000; ++iter) {
        const bool nu_converged = hi - lo <= 1e-12 * (1.0 + hi);
        if (nu_converged && S - norm_at(hi) <= norm_tol) break;
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (norm_at(mid) >= S ? lo : hi) = mid;
    }

    const Vector coeffs = (w.array() / (ev.array() + hi)).matrix();
    return {eig.eigenvectors() * coeffs, hi};
}

inline Vector ball_project_hnorm(const Vector& zeta, const Matrix& H, double S)
{
    return project_onto_ball(zeta, H, S).theta;
}

}  // namespace glb
