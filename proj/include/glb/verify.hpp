#pragma once

// Brute-force oracles and the verification suites built on them. The oracles deliberately avoid the
// production code paths they check: the projection oracle samples the feasible set, the OMD oracle
// runs accelerated projected gradient on the un-split objective with a plain Euclidean projection,
// the Sherman-Morrison check inverts densely with LU, and the MLE oracle is a grid search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "glb/env.hpp"
#include "glb/estimators.hpp"
#include "glb/glm.hpp"
#include "glb/linalg.hpp"
#include "glb/policies.hpp"

namespace glb::oracle {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Uniform point of the radius-`radius` ball.
inline Vector random_in_ball(Rng& rng, int d, double radius)
{
    const Vector dir = BanditEnv::random_unit(d, rng);
    return dir * radius * std::pow(uniform(rng, 0.0, 1.0), 1.0 / d);
}

/// Q diag(eigs) Q^T with a random orthogonal Q and eigenvalues drawn from [lo, hi].
inline Matrix random_spd(Rng& rng, int d, double lo, double hi)
{
    Matrix A(d, d);
    std::normal_distribution<double> n;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = n(rng);
    const Eigen::HouseholderQR<Matrix> qr(A);
    const Matrix Q = qr.householderQ();
    Vector eig(d);
    for (int i = 0; i < d; ++i) eig(i) = uniform(rng, lo, hi);
    Matrix out = Q * eig.asDiagonal() * Q.transpose();
    return 0.5 * (out + out.transpose());
}

inline double hnorm_objective(const Vector& theta, const Vector& zeta, const Matrix& H)
{
    const Vector diff = theta - zeta;
    return diff.dot(H * diff);
}

/// Euclidean projection onto the ball.
inline Vector euclid_project(const Vector& v, double S)
{
    const double n = v.norm();
    return n > S ? Vector(v * (S / n)) : v;
}

/// Minimizes 0.5 theta^T A theta + b^T theta over ||theta|| <= S with FISTA (adaptive restart),
/// until the gradient-mapping norm drops below `tol`.
inline Vector minimize_ball_qp(const Matrix& A, const Vector& b, double S, double tol = 1e-10,
                               std::size_t max_iter = 2'000'000)
{
    const double L = Eigen::SelfAdjointEigenSolver<Matrix>(A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = 1.0 / L;
    Vector x = Vector::Zero(b.size());
    Vector y = x;
    double momentum = 1.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Vector grad_y = A * y + b;
        const Vector x_next = euclid_project(y - step * grad_y, S);
        const Vector grad_x = A * x_next + b;
        const double mapping = L * (x_next - euclid_project(x_next - step * grad_x, S)).norm();
        if (mapping <= tol) return x_next;
        const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        if ((y - x_next).dot(x_next - x) > 0.0) {
            y = x_next;
            momentum = 1.0;
        } else {
            y = x_next + ((momentum - 1.0) / m_next) * (x_next - x);
            momentum = m_next;
        }
        x = x_next;
    }
    return x;
}

/// Direct minimizer of the OMD step objective
///   <grad, theta - theta_t> + 0.5 ||theta - theta_t||^2_{c x x^T} + (1/(2 eta)) ||theta - theta_t||^2_{H_t}
/// over the S-ball, where grad = g x and c is the surrogate curvature.
inline Vector omd_step_oracle(const GlmFamily& family, const Vector& theta_t, const Matrix& H_t, const Vector& x,
                              double r, double eta, double S)
{
    const double z = x.dot(theta_t);
    const Vector grad = family.nll_grad(z, r) * x;
    const Matrix A = family.nll_curvature(z) * x * x.transpose() + H_t / eta;
    // Work in theta directly: 0.5 theta^T A theta + (grad - A theta_t)^T theta.
    return minimize_ball_qp(A, grad - A * theta_t, S);
}

/// Grid search over the S-ball at resolution `h`, followed by pattern-search refinement.
inline Vector grid_minimize_2d(const std::function<double(const Vector&)>& f, double S, double h = 1e-3)
{
    Vector best = Vector::Zero(2);
    double best_f = f(best);
    Vector p(2);
    const long n = static_cast<long>(std::ceil(S / h));
    for (long i = -n; i <= n; ++i) {
        p(0) = i * h;
        for (long j = -n; j <= n; ++j) {
            p(1) = j * h;
            if (p.squaredNorm() > S * S) continue;
            const double v = f(p);
            if (v < best_f) {
                best_f = v;
                best = p;
            }
        }
    }
    for (double step = h; step > 1e-9; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (int k = 0; k < 8; ++k) {
                const double a = k * M_PI / 4.0;
                Vector q = best + step * Vector{{std::cos(a), std::sin(a)}};
                if (q.norm() > S) q *= S / q.norm();
                const double v = f(q);
                if (v < best_f) {
                    best_f = v;
                    best = q;
                    moved = true;
                }
            }
        }
    }
    return best;
}

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::string summary;
    std::string failing_case;
};

inline std::string describe(const Vector& v)
{
    std::ostringstream os;
    os << std::setprecision(17) << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
    os << ')';
    return os.str();
}

inline std::string describe(const Matrix& m)
{
    std::ostringstream os;
    os << '[';
    for (Eigen::Index i = 0; i < m.rows(); ++i) os << (i ? "; " : "") << describe(Vector(m.row(i).transpose()));
    os << ']';
    return os.str();
}

/// Random (zeta, H, S) with d <= 4: exterior points land on the sphere, the result beats
/// `samples` random feasible points, and the KKT residual is small.
inline SuiteResult projection_suite(std::size_t cases, std::size_t samples = 10'000, std::uint64_t seed = 1)
{
    SuiteResult res{"projection", true, {}, {}};
    Rng rng(seed);
    std::size_t exterior = 0;
    double worst_norm_gap = 0.0, worst_kkt = 0.0;
    for (std::size_t c = 0; c < cases && res.passed; ++c) {
        const int d = 1 + static_cast<int>(rng() % 4);
        const Matrix H = random_spd(rng, d, 0.1, 10.0);
        const double S = uniform(rng, 0.2, 2.0);
        const Vector zeta = BanditEnv::random_unit(d, rng) * uniform(rng, 0.0, 4.0 * S);
        const BallProjection proj = project_onto_ball(zeta, H, S);
        const double obj = hnorm_objective(proj.theta, zeta, H);

        std::string failure;
        if (zeta.norm() > S) {
            ++exterior;
            const double gap = std::abs(proj.theta.norm() - S);
            worst_norm_gap = std::max(worst_norm_gap, gap);
            if (gap > 1e-9) failure = "norm off the sphere by " + std::to_string(gap);
            const double kkt = (H * (proj.theta - zeta) + proj.nu * proj.theta).norm() / (1.0 + (H * zeta).norm());
            worst_kkt = std::max(worst_kkt, kkt);
            if (kkt > 1e-8) failure = "KKT residual " + std::to_string(kkt);
        } else if ((proj.theta - zeta).norm() != 0.0) {
            failure = "interior point moved";
        }
        for (std::size_t s = 0; s < samples && failure.empty(); ++s) {
            const Vector p = random_in_ball(rng, d, S);
            if (hnorm_objective(p, zeta, H) < obj - 1e-12 * (1.0 + obj)) failure = "beaten by feasible sample " + describe(p);
        }
        if (!failure.empty()) {
            res.passed = false;
            res.failing_case = failure + " | zeta=" + describe(zeta) + " H=" + describe(H) + " S=" + std::to_string(S);
        }
    }
    std::ostringstream os;
    os << cases << " cases (" << exterior << " exterior), max |norm-S|=" << worst_norm_gap << ", max KKT=" << worst_kkt;
    res.summary = os.str();
    return res;
}

/// Random logistic OMD steps (d=2 by default): two-step update vs direct minimization.
inline SuiteResult omd_suite(std::size_t cases, int d = 2, double S = 2.0, std::uint64_t seed = 2)
{
    SuiteResult res{"omd", true, {}, {}};
    Rng rng(seed);
    const GlmFamily family = GlmFamily::logistic();
    const OmdParams params = configure_params(family, d, S, 0.1, LambdaMode::practical);
    double worst = 0.0;
    std::size_t active = 0;
    for (std::size_t c = 0; c < cases; ++c) {
        const Vector theta = random_in_ball(rng, d, S);
        const Matrix H = random_spd(rng, d, 0.05, 3.0);
        const Vector x = random_in_ball(rng, d, 1.0);
        const double r = (rng() % 2) ? 1.0 : 0.0;

        OmdState state(family, d, params);
        state.reset(theta, &H);
        state.update(x, r);
        const Vector oracle = omd_step_oracle(family, theta, H, x, r, params.eta, S);
        if (oracle.norm() > S - 1e-6) ++active;
        const double err = (state.theta() - oracle).cwiseAbs().maxCoeff();
        worst = std::max(worst, err);
        if (err > 1e-6 && res.passed) {
            res.passed = false;
            res.failing_case = "theta_t=" + describe(theta) + " H=" + describe(H) + " x=" + describe(x)
                             + " r=" + std::to_string(r) + " got " + describe(state.theta()) + " oracle " + describe(oracle);
        }
    }
    std::ostringstream os;
    os << cases << " cases (" << active << " on the boundary), max coordinate error=" << worst;
    res.summary = os.str();
    return res;
}

/// Rank-1 updates with c in [0.01, 1], ||v|| <= 1, then compare against a dense LU inverse.
inline SuiteResult sherman_morrison_suite(std::size_t updates, int d = 5, std::uint64_t seed = 3)
{
    SuiteResult res{"sherman-morrison", true, {}, {}};
    Rng rng(seed);
    InverseTracker tracker = InverseTracker::scaled_identity(d, 1.0);
    double worst = 0.0;
    for (std::size_t u = 1; u <= updates; ++u) {
        tracker.rank1_update(random_in_ball(rng, d, 1.0), uniform(rng, 0.01, 1.0));
        if (u % 1000 == 0 || u == updates) {
            const Matrix dense = tracker.matrix().fullPivLu().inverse();
            worst = std::max(worst, (tracker.inverse() - dense).cwiseAbs().maxCoeff());
        }
    }
    res.passed = worst <= 1e-6;
    std::ostringstream os;
    os << updates << " updates at d=" << d << ", max |tracked - dense inverse|=" << worst
       << ", max |A A^-1 - I|=" << tracker.consistency_error();
    res.summary = os.str();
    if (!res.passed) res.failing_case = "drift " + std::to_string(worst);
    return res;
}

/// Gaussian fits vs the ridge closed form, logistic fits vs grid search.
inline SuiteResult mle_suite(std::size_t logistic_cases, std::size_t gaussian_cases = 20, std::uint64_t seed = 4)
{
    SuiteResult res{"mle", true, {}, {}};
    Rng rng(seed);
    double worst_gauss = 0.0, worst_logit = 0.0;

    const GlmFamily gauss = GlmFamily::gaussian();
    for (std::size_t c = 0; c < gaussian_cases; ++c) {
        const int d = 1 + static_cast<int>(rng() % 4);
        const double lambda = uniform(rng, 0.1, 2.0);
        const double S = 50.0;
        MleState mle(d, lambda);
        const std::size_t n = 5 + rng() % 20;
        Matrix X(static_cast<Eigen::Index>(n), d);
        Vector y(static_cast<Eigen::Index>(n));
        std::normal_distribution<double> noise;
        for (std::size_t i = 0; i < n; ++i) {
            const Vector x = random_in_ball(rng, d, 1.0);
            const double r = 2.0 * x.sum() + noise(rng);
            mle.add(x, r);
            X.row(static_cast<Eigen::Index>(i)) = x.transpose();
            y(static_cast<Eigen::Index>(i)) = r;
        }
        const Matrix normal = 2.0 * lambda * Matrix::Identity(d, d) + X.transpose() * X;
        const Vector closed = normal.fullPivLu().solve(X.transpose() * y);
        const double err = (mle_fit(mle, gauss, S) - closed).cwiseAbs().maxCoeff();
        worst_gauss = std::max(worst_gauss, err);
        if (err > 1e-8 && res.passed) {
            res.passed = false;
            res.failing_case = "gaussian ridge case " + std::to_string(c) + " error " + std::to_string(err);
        }
    }

    const GlmFamily logit = GlmFamily::logistic();
    for (std::size_t c = 0; c < logistic_cases; ++c) {
        const double S = 1.0;
        const double lambda = uniform(rng, 0.1, 1.0);
        const Vector truth = BanditEnv::random_unit(2, rng) * uniform(rng, 0.5, 3.0);
        MleState mle(2, lambda);
        for (int i = 0; i < 10; ++i) {
            const Vector x = random_in_ball(rng, 2, 1.0);
            mle.add(x, logit.sample_reward(x.dot(truth), rng));
        }
        const Vector fit = mle_fit(mle, logit, S);
        const Vector grid = grid_minimize_2d([&](const Vector& th) { return mle.objective(logit, th); }, S);
        const double err = (fit - grid).cwiseAbs().maxCoeff();
        worst_logit = std::max(worst_logit, err);
        if (err > 2e-3 && res.passed) {
            res.passed = false;
            res.failing_case = "logistic case " + std::to_string(c) + " fit " + describe(fit) + " grid " + describe(grid);
        }
    }
    std::ostringstream os;
    os << gaussian_cases << " ridge cases (max err " << worst_gauss << "), " << logistic_cases
       << " logistic grid cases (max err " << worst_logit << ")";
    res.summary = os.str();
    return res;
}

struct CoverageResult {
    std::size_t trials = 0;
    std::size_t covered = 0;
    [[nodiscard]] double fraction() const { return trials ? static_cast<double>(covered) / static_cast<double>(trials) : 0.0; }
};

/// Fraction of GLB-OMD runs (theory-mode parameters) whose confidence set holds theta* at every
/// round 1..T.
inline CoverageResult coverage_experiment(const GlmFamily& family, int d, double S, std::size_t T, double delta,
                                          std::size_t trials, int K = 20, std::uint64_t seed = 5)
{
    CoverageResult out;
    out.trials = trials;
    const OmdParams params = configure_params(family, d, S, delta, LambdaMode::theory);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        EnvConfig ec;
        ec.family = family;
        ec.d = d;
        ec.S = S;
        ec.K = K;
        BanditEnv env(ec, seed * 1'000'003 + trial);
        GlbOmdPolicy policy(family, d, params);
        bool covered = true;
        run_trial(policy, env, T, [&](std::size_t) {
            if (covered && !policy.state().confidence_set().contains(env.theta_star())) covered = false;
        });
        if (covered) ++out.covered;
    }
    return out;
}

inline SuiteResult coverage_suite(std::size_t trials, std::size_t T, double delta = 0.1,
                                  const GlmFamily& family = GlmFamily::logistic(), int d = 2, double S = 1.0)
{
    SuiteResult res{"coverage", true, {}, {}};
    const CoverageResult cov = coverage_experiment(family, d, S, T, delta, trials);
    res.passed = cov.fraction() >= 1.0 - delta;
    std::ostringstream os;
    os << family.name() << " d=" << d << " S=" << S << " T=" << T << " delta=" << delta << ": " << cov.covered << "/"
       << cov.trials << " trials covered at every round (" << cov.fraction() << ")";
    res.summary = os.str();
    if (!res.passed) res.failing_case = os.str();
    return res;
}

}  // namespace glb::oracle
