#pragma once

// Online mirror descent estimator with its ellipsoidal confidence set, and the regularized
// maximum-likelihood estimator used by the GLM-UCB baseline.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glb/errors.hpp"
#include "glb/glm.hpp"
#include "glb/linalg.hpp"

namespace glb {

enum class LambdaMode { theory, practical };

inline std::string_view to_string(LambdaMode m) { return m == LambdaMode::theory ? "theory" : "practical"; }

inline LambdaMode lambda_mode_from_name(std::string_view s)
{
    if (s == "theory") return LambdaMode::theory;
    if (s == "practical") return LambdaMode::practical;
    throw ConfigError("unknown lambda mode '" + std::string(s) + "' (expected theory|practical)");
}

struct OmdParams {
    double S = 1.0;
    double eta = 1.0;
    double lambda = 1.0;
    double delta = 0.1;
    LambdaMode lambda_mode = LambdaMode::theory;
};

/// Step size eta = 1 + R S in both modes. Theory mode uses
///   lambda = 2 max{7 d eta R^2, max{3 eta R S, 1} C_mu / g},
/// which the coverage guarantee needs; practical mode uses lambda = d.
inline OmdParams configure_params(const GlmFamily& family, int d, double S, double delta, LambdaMode mode)
{
    if (d < 1) throw ConfigError("dimension must be at least 1");
    if (!(S > 0.0) || !std::isfinite(S)) throw ConfigError("S must be positive and finite");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");

    const double R = family.self_concordance();
    const double C_mu = family.bounds(S).C_mu;
    const double g = family.dispersion();

    OmdParams p;
    p.S = S;
    p.delta = delta;
    p.lambda_mode = mode;
    p.eta = 1.0 + R * S;
    if (mode == LambdaMode::theory) {
        const double curvature_term = 7.0 * d * p.eta * R * R;
        const double lipschitz_term = std::max(3.0 * p.eta * R * S, 1.0) * C_mu / g;
        p.lambda = 2.0 * std::max(curvature_term, lipschitz_term);
    } else {
        p.lambda = static_cast<double>(d);
    }
    return p;
}

/// beta_t(delta) = sqrt(4 lambda S^2 + 2 eta ln(1/delta) + 6 d eta^2 ln(2 + 2 C_mu t / (lambda g))).
inline double beta_radius(const OmdParams& p, const GlmFamily& family, int d, double t)
{
    const double C_mu = family.bounds(p.S).C_mu;
    const double g = family.dispersion();
    const double under = 4.0 * p.lambda * p.S * p.S
                       + 2.0 * p.eta * std::log(1.0 / p.delta)
                       + 6.0 * d * p.eta * p.eta * std::log(2.0 + 2.0 * C_mu * t / (p.lambda * g));
    return std::sqrt(under);
}

/// { theta : ||theta - center||_H <= beta }.
struct ConfidenceSet {
    Vector center;
    Matrix H;
    double beta = 0.0;

    [[nodiscard]] double distance(const Vector& theta) const
    {
        if (theta.size() != center.size()) throw ContractViolation("ConfidenceSet: dimension mismatch");
        return weighted_norm(theta - center, H);
    }
    [[nodiscard]] bool contains(const Vector& theta) const { return distance(theta) <= beta; }
};

inline bool contains(const ConfidenceSet& set, const Vector& theta) { return set.contains(theta); }

inline void check_action(const Vector& x, Eigen::Index d)
{
    if (x.size() != d) throw ContractViolation("action has wrong dimension");
    if (!x.allFinite()) throw ContractViolation("action has non-finite entries");
    if (x.norm() > 1.0 + 1e-9) throw ContractViolation("action norm exceeds 1");
}

/// One-pass GLB-OMD learner.
///
/// Each update minimizes the quadratic surrogate of the current loss plus a prox term in the
/// accumulated local Hessian, over the S-ball. It runs in the two-step form
///   H~ = H + eta mu'(x^T theta_t)/g x x^T
///   zeta = theta_t - eta H~^{-1} grad
///   theta_{t+1} = argmin_{||theta|| <= S} ||theta - zeta||_{H~}
/// followed by H += mu'(x^T theta_{t+1})/g x x^T. Gradient and surrogate curvature are evaluated
/// at theta_t; the curvature stored in H is evaluated at theta_{t+1}.
class OmdState {
public:
    OmdState(GlmFamily family, int d, OmdParams params)
        : family_(std::move(family))
        , params_(params)
        , theta_(Vector::Zero(d))
        , H_(InverseTracker::scaled_identity(d, params.lambda))
    {
        if (d < 1) throw ConfigError("dimension must be at least 1");
    }

    void update(const Vector& x, double r)
    {
        check_action(x, dim());
        if (!std::isfinite(r)) throw ContractViolation("reward is not finite");

        const double z = x.dot(theta_);
        const double grad_scale = family_.nll_grad(z, r);
        const double curvature = family_.nll_curvature(z);
        const double eta = params_.eta;

        Vector zeta = theta_;
        Matrix H_tilde = H_.matrix();
        if (grad_scale != 0.0 || curvature != 0.0) {
            const Matrix H_tilde_inv = sherman_morrison(H_.inverse(), x, eta * curvature);
            zeta.noalias() -= eta * grad_scale * (H_tilde_inv * x);
            H_tilde.noalias() += eta * curvature * x * x.transpose();
        }
        theta_ = ball_project_hnorm(zeta, H_tilde, params_.S);

        const double next_curvature = family_.nll_curvature(x.dot(theta_));
        if (next_curvature > 0.0) H_.rank1_update(x, next_curvature);
        ++t_;
    }

    [[nodiscard]] ConfidenceSet confidence_set() const
    {
        return {theta_, H_.matrix(), beta()};
    }

    [[nodiscard]] double beta() const
    {
        return beta_radius(params_, family_, static_cast<int>(dim()), static_cast<double>(t_));
    }

    [[nodiscard]] const Vector& theta() const noexcept { return theta_; }
    [[nodiscard]] const Matrix& H() const noexcept { return H_.matrix(); }
    [[nodiscard]] const Matrix& H_inv() const noexcept { return H_.inverse(); }
    [[nodiscard]] const InverseTracker& tracker() const noexcept { return H_; }
    /// 1-based round counter; a fresh state is at t = 1.
    [[nodiscard]] std::size_t t() const noexcept { return t_; }
    [[nodiscard]] const OmdParams& params() const noexcept { return params_; }
    [[nodiscard]] const GlmFamily& family() const noexcept { return family_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return theta_.size(); }

    /// Overwrites the estimate (and optionally H). Used by the verification suites to start an
    /// update from an arbitrary state.
    void reset(const Vector& theta, const Matrix* H = nullptr)
    {
        if (theta.size() != dim() || theta.norm() > params_.S + 1e-9)
            throw ContractViolation("reset: point outside the parameter ball");
        theta_ = theta;
        if (H) {
            if (H->rows() != dim() || H->cols() != dim()) throw ContractViolation("reset: H has wrong shape");
            H_ = InverseTracker(*H);
        }
    }

private:
    GlmFamily family_;
    OmdParams params_;
    Vector theta_;
    InverseTracker H_;
    std::size_t t_ = 1;
};

inline void omd_update(OmdState& state, const Vector& x, double r) { state.update(x, r); }
inline ConfidenceSet confidence_set(const OmdState& state) { return state.confidence_set(); }

struct MleFit {
    Vector theta;
    int iterations = 0;
    double projected_grad_norm = 0.0;
    bool converged = false;
};

/// History plus ridge-regularized fit:
///   argmin_{||theta|| <= S} sum_s (m(x_s^T theta) - r_s x_s^T theta)/g + lambda ||theta||^2.
class MleState {
public:
    static constexpr int kMaxIterations = 100;
    static constexpr double kTolerance = 1e-8;

    MleState(int d, double lambda)
        : d_(d)
        , lambda_(lambda)
        , theta_hat_(Vector::Zero(d))
    {
        if (d < 1) throw ConfigError("dimension must be at least 1");
        if (!(lambda > 0.0)) throw ConfigError("regularizer must be positive");
    }

    void add(const Vector& x, double r)
    {
        check_action(x, d_);
        if (!std::isfinite(r)) throw ContractViolation("reward is not finite");
        actions_.push_back(x);
        rewards_.push_back(r);
    }

    [[nodiscard]] double objective(const GlmFamily& family, const Vector& theta) const
    {
        double f = lambda_ * theta.squaredNorm();
        for (std::size_t s = 0; s < actions_.size(); ++s)
            f += family.nll_loss(actions_[s].dot(theta), rewards_[s]);
        return f;
    }

    [[nodiscard]] Vector gradient(const GlmFamily& family, const Vector& theta) const
    {
        Vector g = 2.0 * lambda_ * theta;
        for (std::size_t s = 0; s < actions_.size(); ++s)
            g.noalias() += family.nll_grad(actions_[s].dot(theta), rewards_[s]) * actions_[s];
        return g;
    }

    /// Damped projected Newton from `start`. Each step minimizes the local quadratic model over the
    /// ball (an H-norm projection of the Newton point) and backtracks along the segment towards it.
    [[nodiscard]] MleFit fit(const GlmFamily& family, double S, const Vector& start) const
    {
        MleFit out;
        Vector theta = start.norm() <= S ? start : Vector(start * (S / start.norm()));
        double f = objective(family, theta);

        for (int iter = 0; iter <= kMaxIterations; ++iter) {
            Vector grad = 2.0 * lambda_ * theta;
            Matrix hess = 2.0 * lambda_ * Matrix::Identity(d_, d_);
            for (std::size_t s = 0; s < actions_.size(); ++s) {
                const Vector& x = actions_[s];
                const double z = x.dot(theta);
                grad.noalias() += family.nll_grad(z, rewards_[s]) * x;
                hess.noalias() += family.nll_curvature(z) * x * x.transpose();
            }
            out.projected_grad_norm = projected_gradient_norm(theta, grad, S);
            out.iterations = iter;
            if (out.projected_grad_norm <= kTolerance) {
                out.converged = true;
                break;
            }
            if (iter == kMaxIterations) break;

            symmetrize(hess);
            const Vector newton_point = theta - hess.llt().solve(grad);
            const Vector direction = ball_project_hnorm(newton_point, hess, S) - theta;
            const double slope = grad.dot(direction);
            if (!(slope < 0.0)) {
                // On the sphere the projection's radial rounding swamps a tiny tangential step;
                // finish with Newton steps restricted to the sphere instead.
                if (!sphere_newton_step(theta, grad, hess, S)) break;
                f = objective(family, theta);
                continue;
            }

            Vector candidate = theta + direction;
            double f_candidate = objective(family, candidate);
            // Below the objective's rounding level Armijo cannot discriminate; take the Newton step.
            if (-slope <= 1e-13 * (1.0 + std::abs(f))) {
                theta = std::move(candidate);
                f = f_candidate;
                continue;
            }
            double step = 1.0;
            while (f_candidate > f + 1e-4 * step * slope && step > 1e-12) {
                step *= 0.5;
                candidate = theta + step * direction;
                f_candidate = objective(family, candidate);
            }
            if (f_candidate > f) {
                if (!sphere_newton_step(theta, grad, hess, S)) break;
                f = objective(family, theta);
                continue;
            }
            theta = std::move(candidate);
            f = f_candidate;
        }
        out.theta = std::move(theta);
        return out;
    }

    /// Refits from the stored estimate (warm) or from the origin (cold) and stores the result.
    MleFit refit(const GlmFamily& family, double S, bool cold)
    {
        MleFit result = fit(family, S, cold ? Vector(Vector::Zero(d_)) : theta_hat_);
        theta_hat_ = result.theta;
        return result;
    }

    [[nodiscard]] const Vector& theta_hat() const noexcept { return theta_hat_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] std::size_t size() const noexcept { return actions_.size(); }
    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] const std::vector<Vector>& actions() const noexcept { return actions_; }
    [[nodiscard]] const std::vector<double>& rewards() const noexcept { return rewards_; }

    /// ||theta - P_ball(theta - grad)||_2, zero exactly at a constrained stationary point.
    static double projected_gradient_norm(const Vector& theta, const Vector& grad, double S)
    {
        Vector moved = theta - grad;
        const double n = moved.norm();
        if (n > S) moved *= S / n;
        return (theta - moved).norm();
    }

private:
    /// One Newton step on the sphere ||theta|| = S for an active constraint (gradient pointing
    /// inwards): solves the Lagrangian system on the tangent space and retracts radially.
    static bool sphere_newton_step(Vector& theta, const Vector& grad, const Matrix& hess, double S)
    {
        const double r = theta.norm();
        if (r < S * (1.0 - 1e-9)) return false;
        const Vector n = theta / r;
        const double multiplier = -grad.dot(n) / r;
        if (!(multiplier > 0.0)) return false;
        const Eigen::Index d = theta.size();
        const Matrix P = Matrix::Identity(d, d) - n * n.transpose();
        const Matrix lagrangian = hess + multiplier * Matrix::Identity(d, d);
        // Tangent-space system (P L P + n n^T) step = -P grad keeps the matrix nonsingular.
        const Matrix system = P * lagrangian * P + n * n.transpose();
        const Vector step = system.ldlt().solve(-(P * grad));
        if (!step.allFinite()) return false;
        const Vector moved = theta + step;
        theta = moved * (S / moved.norm());
        return true;
    }

    int d_;
    double lambda_;
    Vector theta_hat_;
    std::vector<Vector> actions_;
    std::vector<double> rewards_;
};

/// Cold fit of the whole history.
inline Vector mle_fit(const MleState& state, const GlmFamily& family, double S)
{
    return state.fit(family, S, Vector::Zero(state.dim())).theta;
}

}  // namespace glb
