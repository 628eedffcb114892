#pragma once

// Canonical exponential-family reward models used by the bandit:
//   p(r | z) ∝ exp((r z - m(z)) / g(tau)),   E[r] = mu(z) = m'(z),   Var[r] = g(tau) mu'(z).
// Only the closed-form families with known self-concordance constants are provided.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "glb/errors.hpp"

namespace glb {

enum class FamilyKind { logistic, poisson, gaussian };

/// Extremes of mu' over the margin interval [-S, S].
struct FamilyBounds {
    double S = 0.0;
    double c_mu = 0.0;
    double C_mu = 0.0;
    double kappa = 0.0;
};

class GlmFamily {
public:
    static GlmFamily logistic() { return GlmFamily(FamilyKind::logistic, 1.0); }
    static GlmFamily poisson(std::optional<double> reward_cap = std::nullopt)
    {
        GlmFamily f(FamilyKind::poisson, 1.0);
        if (reward_cap) {
            if (!(*reward_cap > 0.0))
                throw ConfigError("poisson reward cap must be positive");
            f.reward_cap_ = reward_cap;
        }
        return f;
    }
    static GlmFamily gaussian(double noise_variance = 1.0)
    {
        if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
            throw ConfigError("gaussian dispersion must be a positive finite number");
        return GlmFamily(FamilyKind::gaussian, noise_variance);
    }

    /// Builds a family from its harness name. `dispersion` is only honoured for gaussian.
    static GlmFamily from_name(std::string_view name, std::optional<double> dispersion = std::nullopt)
    {
        if (name == "logistic") return logistic();
        if (name == "poisson") return poisson();
        if (name == "gaussian") return gaussian(dispersion.value_or(1.0));
        throw ConfigError("unknown family '" + std::string(name) + "' (expected logistic|poisson|gaussian)");
    }

    [[nodiscard]] FamilyKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::string_view name() const noexcept
    {
        switch (kind_) {
        case FamilyKind::logistic: return "logistic";
        case FamilyKind::poisson: return "poisson";
        case FamilyKind::gaussian: return "gaussian";
        }
        return "?";
    }
    /// g(tau).
    [[nodiscard]] double dispersion() const noexcept { return dispersion_; }
    /// R in |mu''| <= R mu'.
    [[nodiscard]] double self_concordance() const noexcept
    {
        return kind_ == FamilyKind::gaussian ? 0.0 : 1.0;
    }
    [[nodiscard]] std::optional<double> reward_cap() const noexcept { return reward_cap_; }

    [[nodiscard]] double mu(double z) const
    {
        check_finite(z);
        switch (kind_) {
        case FamilyKind::logistic: return sigmoid(z);
        case FamilyKind::poisson:
            if (reward_cap_ && z > std::log(*reward_cap_))
                throw DomainError("poisson margin exceeds ln(reward_cap)");
            return std::exp(z);
        case FamilyKind::gaussian: return z;
        }
        return 0.0;
    }

    [[nodiscard]] double mu_prime(double z) const
    {
        check_finite(z);
        switch (kind_) {
        case FamilyKind::logistic: return sigmoid(z) * sigmoid(-z);
        case FamilyKind::poisson: return std::exp(z);
        case FamilyKind::gaussian: return 1.0;
        }
        return 0.0;
    }

    [[nodiscard]] double mu_second(double z) const
    {
        check_finite(z);
        switch (kind_) {
        case FamilyKind::logistic: {
            const double p = sigmoid(z);
            const double q = sigmoid(-z);
            return p * q * (q - p);
        }
        case FamilyKind::poisson: return std::exp(z);
        case FamilyKind::gaussian: return 0.0;
        }
        return 0.0;
    }

    /// m(z). The logistic branch switches to z + log1p(e^-z) above z = 30.
    [[nodiscard]] double cumulant(double z) const
    {
        check_finite(z);
        switch (kind_) {
        case FamilyKind::logistic:
            return z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        case FamilyKind::poisson: return std::exp(z);
        case FamilyKind::gaussian: return 0.5 * z * z;
        }
        return 0.0;
    }

    /// Per-observation negative log-likelihood (m(z) - r z) / g.
    [[nodiscard]] double nll_loss(double z, double r) const
    {
        check_finite(r);
        return (cumulant(z) - r * z) / dispersion_;
    }

    /// d/dz of nll_loss.
    [[nodiscard]] double nll_grad(double z, double r) const
    {
        check_finite(r);
        return (mu(z) - r) / dispersion_;
    }

    /// d²/dz² of nll_loss.
    [[nodiscard]] double nll_curvature(double z) const { return mu_prime(z) / dispersion_; }

    [[nodiscard]] FamilyBounds bounds(double S) const
    {
        if (!(S > 0.0) || !std::isfinite(S))
            throw ConfigError("parameter bound S must be positive and finite");
        FamilyBounds b;
        b.S = S;
        switch (kind_) {
        case FamilyKind::logistic:
            // mu' is even and decreasing in |z|
            b.c_mu = mu_prime(S);
            b.C_mu = 0.25;
            break;
        case FamilyKind::poisson:
            b.c_mu = std::exp(-S);
            b.C_mu = std::exp(S);
            break;
        case FamilyKind::gaussian:
            b.c_mu = 1.0;
            b.C_mu = 1.0;
            break;
        }
        b.kappa = 1.0 / b.c_mu;
        return b;
    }

    /// Draws a reward with mean mu(z). Poisson samples are never truncated.
    template <typename Rng>
    double sample_reward(double z, Rng& rng) const
    {
        check_finite(z);
        switch (kind_) {
        case FamilyKind::logistic: return std::bernoulli_distribution(sigmoid(z))(rng) ? 1.0 : 0.0;
        case FamilyKind::poisson:
            return static_cast<double>(std::poisson_distribution<long long>(std::exp(z))(rng));
        case FamilyKind::gaussian: return std::normal_distribution<double>(z, std::sqrt(dispersion_))(rng);
        }
        return 0.0;
    }

    friend bool operator==(const GlmFamily&, const GlmFamily&) = default;

private:
    GlmFamily(FamilyKind kind, double dispersion)
        : kind_(kind)
        , dispersion_(dispersion)
    {}

    static void check_finite(double v)
    {
        if (!std::isfinite(v)) throw DomainError("non-finite argument to link function");
    }

    static double sigmoid(double z)
    {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    FamilyKind kind_;
    double dispersion_;
    std::optional<double> reward_cap_;
};

/// Free-function forms of the family members, for call sites that read better without the receiver.
inline double mu(const GlmFamily& f, double z) { return f.mu(z); }
inline double mu_prime(const GlmFamily& f, double z) { return f.mu_prime(z); }
inline double mu_second(const GlmFamily& f, double z) { return f.mu_second(z); }
inline double cumulant(const GlmFamily& f, double z) { return f.cumulant(z); }
inline double nll_loss(const GlmFamily& f, double z, double r) { return f.nll_loss(z, r); }
inline FamilyBounds family_bounds(const GlmFamily& f, double S) { return f.bounds(S); }

}  // namespace glb
