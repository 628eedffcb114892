#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "glb/errors.hpp"
#include "glb/estimators.hpp"
#include "glb/glm.hpp"
#include "glb/linalg.hpp"

namespace glb {

/// One arm per column.
using ActionSet = Matrix;

struct Selection {
    std::size_t index = 0;
    double score = 0.0;
};

inline void check_action_set(const ActionSet& arms, Eigen::Index d)
{
    if (arms.cols() == 0) throw ContractViolation("empty action set");
    if (arms.rows() != d) throw ContractViolation("action set has wrong dimension");
    if (!arms.allFinite()) throw ContractViolation("action set has non-finite entries");
    if (arms.colwise().norm().maxCoeff() > 1.0 + 1e-9) throw ContractViolation("action norm exceeds 1");
}

/// First index attaining the maximum.
template <typename ScoreFn>
Selection argmax_arm(const ActionSet& arms, ScoreFn&& score)
{
    Selection best{0, score(arms.col(0))};
    for (Eigen::Index k = 1; k < arms.cols(); ++k) {
        const double s = score(arms.col(k));
        if (s > best.score) best = {static_cast<std::size_t>(k), s};
    }
    return best;
}

/// argmax_x x^T theta + beta sqrt(x^T H^{-1} x), which equals argmax_x max_{theta' in C} x^T theta'
/// for the ellipsoid C = {theta' : ||theta' - theta||_H <= beta}. O(d^2) per arm.
inline Selection optimistic_select(const ActionSet& arms, const Vector& theta, const Matrix& H_inv, double beta)
{
    return argmax_arm(arms, [&](const auto& x) {
        return x.dot(theta) + beta * std::sqrt(std::max(x.dot(H_inv * x), 0.0));
    });
}

class Policy {
public:
    virtual ~Policy() = default;

    [[nodiscard]] virtual std::string_view name() const = 0;
    [[nodiscard]] virtual Selection select(const ActionSet& arms) const = 0;
    virtual void observe(const Vector& x, double r) = 0;
    /// Exploration radius used by the next select call.
    [[nodiscard]] virtual double current_beta() const = 0;
    /// Non-converged inner solves so far.
    [[nodiscard]] virtual std::size_t warnings() const { return 0; }
};

/// Optimistic arm selection over the OMD confidence ellipsoid:
///   argmax_x  x^T theta_t + beta_t ||x||_{H_t^{-1}}.
/// The greedy variant drops the bonus.
class GlbOmdPolicy final : public Policy {
public:
    GlbOmdPolicy(const GlmFamily& family, int d, const OmdParams& params, bool greedy = false)
        : state_(family, d, params)
        , greedy_(greedy)
    {}

    [[nodiscard]] std::string_view name() const override { return greedy_ ? "greedy" : "glb-omd"; }

    [[nodiscard]] Selection select(const ActionSet& arms) const override
    {
        check_action_set(arms, state_.dim());
        return optimistic_select(arms, state_.theta(), state_.H_inv(), current_beta());
    }

    void observe(const Vector& x, double r) override
    {
        if (!pinned_) state_.update(x, r);
    }

    [[nodiscard]] double current_beta() const override { return greedy_ ? 0.0 : state_.beta(); }

    [[nodiscard]] const OmdState& state() const noexcept { return state_; }

    /// Test hook: fixes theta_t and turns observe into a no-op.
    void pin_theta(const Vector& theta)
    {
        state_.reset(theta);
        pinned_ = true;
    }

private:
    OmdState state_;
    bool greedy_;
    bool pinned_ = false;
};

/// MLE-based GLM-UCB baseline scoring mu(x^T theta_hat) + scale kappa sqrt(d ln(1+t)) ||x||_{V^{-1}},
/// with V = lambda I + sum x x^T. The fit is warm-started every round and redone from the origin
/// every `kFullRefitPeriod` rounds.
class GlmUcbPolicy final : public Policy {
public:
    static constexpr std::size_t kFullRefitPeriod = 50;

    GlmUcbPolicy(const GlmFamily& family, int d, double S, double lambda, double radius_scale = 1.0)
        : family_(family)
        , S_(S)
        , kappa_(family.bounds(S).kappa)
        , radius_scale_(radius_scale)
        , mle_(d, lambda)
        , design_(InverseTracker::scaled_identity(d, lambda))
    {
        if (!(radius_scale >= 0.0)) throw ConfigError("radius_scale must be nonnegative");
    }

    [[nodiscard]] std::string_view name() const override { return "glm-ucb"; }

    [[nodiscard]] Selection select(const ActionSet& arms) const override
    {
        check_action_set(arms, mle_.dim());
        const double t = static_cast<double>(round());
        return argmax_arm(arms, [&](const auto& x) { return score(Vector(x), t); });
    }

    void observe(const Vector& x, double r) override
    {
        mle_.add(x, r);
        design_.rank1_update(x, 1.0);
        const bool cold = mle_.size() % kFullRefitPeriod == 1 || kFullRefitPeriod == 1;
        last_fit_ = mle_.refit(family_, S_, cold);
        if (!last_fit_->converged) ++warnings_;
    }

    [[nodiscard]] double current_beta() const override { return radius(static_cast<double>(round())); }

    [[nodiscard]] double score(const Vector& x, double t) const
    {
        return family_.mu(x.dot(mle_.theta_hat())) + radius(t) * weighted_norm(x, design_.inverse());
    }

    [[nodiscard]] double radius(double t) const
    {
        return radius_scale_ * kappa_ * std::sqrt(mle_.dim() * std::log1p(t));
    }

    [[nodiscard]] std::size_t warnings() const override { return warnings_; }
    [[nodiscard]] const MleState& mle() const noexcept { return mle_; }
    [[nodiscard]] const InverseTracker& design() const noexcept { return design_; }
    [[nodiscard]] const std::optional<MleFit>& last_fit() const noexcept { return last_fit_; }
    /// 1-based index of the round about to be played.
    [[nodiscard]] std::size_t round() const noexcept { return mle_.size() + 1; }

private:
    GlmFamily family_;
    double S_;
    double kappa_;
    double radius_scale_;
    MleState mle_;
    InverseTracker design_;
    std::optional<MleFit> last_fit_;
    std::size_t warnings_ = 0;
};

inline double glm_ucb_score(const GlmUcbPolicy& policy, const Vector& x, double t) { return policy.score(x, t); }

struct PolicyConfig {
    std::string name = "glb-omd";
    GlmFamily family = GlmFamily::logistic();
    int d = 2;
    double S = 1.0;
    double delta = 0.1;
    LambdaMode lambda_mode = LambdaMode::practical;
    double radius_scale = 1.0;
};

/// "glb-omd" | "glm-ucb" | "greedy".
inline std::unique_ptr<Policy> make_policy(const PolicyConfig& cfg)
{
    const OmdParams params = configure_params(cfg.family, cfg.d, cfg.S, cfg.delta, cfg.lambda_mode);
    if (cfg.name == "glb-omd") return std::make_unique<GlbOmdPolicy>(cfg.family, cfg.d, params);
    if (cfg.name == "greedy") return std::make_unique<GlbOmdPolicy>(cfg.family, cfg.d, params, true);
    if (cfg.name == "glm-ucb")
        return std::make_unique<GlmUcbPolicy>(cfg.family, cfg.d, cfg.S, params.lambda, cfg.radius_scale);
    throw ConfigError("unknown policy '" + cfg.name + "' (expected glb-omd|glm-ucb|greedy)");
}

}  // namespace glb
