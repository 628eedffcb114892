#pragma once

// Stochastic GLB environments, arm files, and the single-trial interaction loop.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "glb/errors.hpp"
#include "glb/glm.hpp"
#include "glb/linalg.hpp"
#include "glb/policies.hpp"

namespace glb {

enum class ArmMode { fixed_set, resampled_per_round, from_file };

inline std::string_view to_string(ArmMode m)
{
    switch (m) {
    case ArmMode::fixed_set: return "fixed";
    case ArmMode::resampled_per_round: return "resampled";
    case ArmMode::from_file: return "file";
    }
    return "?";
}

inline ArmMode arm_mode_from_name(std::string_view s)
{
    if (s == "fixed") return ArmMode::fixed_set;
    if (s == "resampled") return ArmMode::resampled_per_round;
    if (s == "file") return ArmMode::from_file;
    throw ConfigError("unknown arm mode '" + std::string(s) + "' (expected fixed|resampled|file)");
}

/// Arm contexts (one arm per column) and optional per-arm Bernoulli means.
struct ArmFile {
    Matrix contexts;
    std::optional<Vector> means;
};

/// Header "d=<int> K=<int> has_means=<0|1>", then K rows of d reals and an optional mean.
/// Lines starting with '#' and blank lines are skipped. Rows are rescaled by the largest row norm
/// when it exceeds 1, so every context ends with ||x|| <= 1.
inline ArmFile parse_arm_file(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    };

    if (!next_line()) throw LoadError("missing header", 0);
    long d = -1, K = -1, has_means = -1;
    {
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw LoadError("malformed header token '" + tok + "'", lineno);
            const std::string key = tok.substr(0, eq);
            long value = 0;
            try {
                std::size_t used = 0;
                value = std::stol(tok.substr(eq + 1), &used);
                if (used != tok.size() - eq - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw LoadError("non-integer header value in '" + tok + "'", lineno);
            }
            if (key == "d") d = value;
            else if (key == "K") K = value;
            else if (key == "has_means") has_means = value;
            else throw LoadError("unknown header key '" + key + "'", lineno);
        }
    }
    if (d < 1 || K < 1 || (has_means != 0 && has_means != 1))
        throw LoadError("header must define d>=1, K>=1, has_means in {0,1}", lineno);

    ArmFile out;
    out.contexts.resize(d, K);
    if (has_means) out.means = Vector(K);
    const long width = d + has_means;
    for (long k = 0; k < K; ++k) {
        if (!next_line()) throw LoadError("expected " + std::to_string(K) + " arm rows, found " + std::to_string(k), lineno + 1);
        std::istringstream rs(line);
        std::vector<double> values;
        std::string tok;
        while (rs >> tok) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument("bad");
                values.push_back(v);
            } catch (const std::exception&) {
                throw LoadError("malformed number '" + tok + "'", lineno);
            }
        }
        if (static_cast<long>(values.size()) != width)
            throw LoadError("expected " + std::to_string(width) + " values, found " + std::to_string(values.size()), lineno);
        for (long j = 0; j < d; ++j) out.contexts(j, k) = values[static_cast<std::size_t>(j)];
        if (has_means) {
            const double m = values.back();
            if (m < 0.0 || m > 1.0) throw LoadError("mean outside [0,1]", lineno);
            (*out.means)(k) = m;
        }
    }
    if (next_line()) throw LoadError("more rows than K", lineno);

    const double max_norm = out.contexts.colwise().norm().maxCoeff();
    if (max_norm > 1.0) out.contexts /= max_norm;
    return out;
}

inline ArmFile load_arm_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open arm file '" + path + "'", 0);
    return parse_arm_file(in);
}

inline void write_arm_file(std::ostream& out, const ArmFile& arms)
{
    const auto d = arms.contexts.rows();
    const auto K = arms.contexts.cols();
    out << "d=" << d << " K=" << K << " has_means=" << (arms.means ? 1 : 0) << '\n';
    out << std::setprecision(17);
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index j = 0; j < d; ++j) out << (j ? " " : "") << arms.contexts(j, k);
        if (arms.means) out << ' ' << (*arms.means)(k);
        out << '\n';
    }
}

inline void write_arm_file(const std::string& path, const ArmFile& arms)
{
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write arm file '" + path + "'", 0);
    write_arm_file(out, arms);
}

struct EnvConfig {
    GlmFamily family = GlmFamily::logistic();
    int d = 2;
    double S = 1.0;
    int K = 20;
    ArmMode arm_mode = ArmMode::resampled_per_round;
    std::optional<ArmFile> arm_file;
};

/// Hidden theta* on the radius-S sphere, per-round action sets, and reward draws.
/// Arm generation, theta* and rewards come from separate streams derived from one seed, so two
/// policies run with the same seed face the same action sets.
class BanditEnv {
public:
    BanditEnv(EnvConfig cfg, std::uint64_t seed)
        : cfg_(std::move(cfg))
    {
        if (cfg_.arm_mode == ArmMode::from_file) {
            if (!cfg_.arm_file) throw ConfigError("from_file arm mode needs an arm file");
            cfg_.d = static_cast<int>(cfg_.arm_file->contexts.rows());
            cfg_.K = static_cast<int>(cfg_.arm_file->contexts.cols());
        }
        if (cfg_.d < 1) throw ConfigError("dimension must be at least 1");
        if (cfg_.K < 2) throw ConfigError("need at least K=2 arms");
        if (!(cfg_.S > 0.0)) throw ConfigError("S must be positive");

        std::seed_seq theta_seq{seed, std::uint64_t{0x7e7a}};
        std::seed_seq arm_seq{seed, std::uint64_t{0xa53}};
        std::seed_seq reward_seq{seed, std::uint64_t{0x4e3a}};
        std::mt19937_64 theta_rng(theta_seq);
        arm_rng_.seed(arm_seq);
        reward_rng_.seed(reward_seq);

        theta_star_ = cfg_.S * random_unit(cfg_.d, theta_rng);
        if (cfg_.arm_mode == ArmMode::from_file) {
            arms_ = cfg_.arm_file->contexts;
        } else {
            arms_ = random_arms();
        }
    }

    [[nodiscard]] const ActionSet& gen_action_set(std::size_t /*t*/)
    {
        if (cfg_.arm_mode == ArmMode::resampled_per_round) arms_ = random_arms();
        return arms_;
    }

    [[nodiscard]] const ActionSet& current_arms() const noexcept { return arms_; }

    /// Reward for an arbitrary action under the GLM.
    double step(const Vector& x) { return cfg_.family.sample_reward(x.dot(theta_star_), reward_rng_); }

    /// Reward for column `index` of the current action set. Uses the listed Bernoulli mean when the
    /// arm file carries one.
    double pull(std::size_t index)
    {
        if (uses_listed_means())
            return std::bernoulli_distribution((*cfg_.arm_file->means)(static_cast<Eigen::Index>(index)))(reward_rng_) ? 1.0 : 0.0;
        return step(arms_.col(static_cast<Eigen::Index>(index)));
    }

    [[nodiscard]] double mean_reward(std::size_t index) const
    {
        if (uses_listed_means()) return (*cfg_.arm_file->means)(static_cast<Eigen::Index>(index));
        return cfg_.family.mu(arms_.col(static_cast<Eigen::Index>(index)).dot(theta_star_));
    }

    struct Optimal {
        std::size_t index = 0;
        double mean = 0.0;
    };

    /// Best arm of `arms` by x^T theta* (equivalently mu(x^T theta*)), or by listed mean.
    [[nodiscard]] Optimal optimal_action(const ActionSet& arms) const
    {
        if (uses_listed_means()) {
            Eigen::Index best = 0;
            const Vector& m = *cfg_.arm_file->means;
            for (Eigen::Index k = 1; k < m.size(); ++k)
                if (m(k) > m(best)) best = k;
            return {static_cast<std::size_t>(best), m(best)};
        }
        const Selection s = argmax_arm(arms, [&](const auto& x) { return x.dot(theta_star_); });
        return {s.index, cfg_.family.mu(s.score)};
    }

    /// Evaluation-side access; never handed to policies.
    [[nodiscard]] const Vector& theta_star() const noexcept { return theta_star_; }
    void set_theta_star(const Vector& theta)
    {
        if (theta.size() != cfg_.d) throw ContractViolation("theta* has wrong dimension");
        theta_star_ = theta;
    }
    [[nodiscard]] const EnvConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] bool uses_listed_means() const noexcept
    {
        return cfg_.arm_mode == ArmMode::from_file && cfg_.arm_file->means.has_value();
    }

    template <typename Rng>
    static Vector random_unit(int d, Rng& rng)
    {
        std::normal_distribution<double> normal;
        Vector v(d);
        do {
            for (int i = 0; i < d; ++i) v(i) = normal(rng);
        } while (v.norm() == 0.0);
        return v / v.norm();
    }

private:
    Matrix random_arms()
    {
        Matrix m(cfg_.d, cfg_.K);
        for (int k = 0; k < cfg_.K; ++k) m.col(k) = random_unit(cfg_.d, arm_rng_);
        return m;
    }

    EnvConfig cfg_;
    Vector theta_star_;
    Matrix arms_;
    std::mt19937_64 arm_rng_;
    std::mt19937_64 reward_rng_;
};

struct RoundRow {
    std::size_t t = 0;
    std::size_t arm = 0;
    double reward = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    double beta = 0.0;
    std::int64_t round_time_ns = 0;
};

struct RunSummary {
    double total_regret = 0.0;
    double kappa_analytic = 0.0;
    /// 1 / min over every presented arm of mu'(x^T theta*).
    double kappa_empirical = 0.0;
    double kappa_star = 0.0;
    std::int64_t wall_time_ns = 0;
    std::size_t warnings = 0;
};

struct RunRecord {
    std::vector<RoundRow> rows;
    /// x_{t,*}^T theta* for every round, in order.
    std::vector<double> optimal_margins;
    RunSummary summary;
};

/// 1 / ((1/T) sum_t mu'(x_{t,*}^T theta*)).
inline double kappa_star_empirical(const GlmFamily& family, const std::vector<double>& optimal_margins)
{
    if (optimal_margins.empty()) throw DomainError("kappa_star is undefined for an empty run");
    double sum = 0.0;
    for (double z : optimal_margins) sum += family.mu_prime(z);
    return static_cast<double>(optimal_margins.size()) / sum;
}

/// Called at the start of round t, before select.
using RoundHook = std::function<void(std::size_t t)>;

/// T rounds of gen_action_set -> select -> pull -> observe. Only select + observe are timed.
inline RunRecord run_trial(Policy& policy, BanditEnv& env, std::size_t T, const RoundHook& hook = {})
{
    if (T < 1) throw ConfigError("horizon T must be at least 1");
    using clock = std::chrono::steady_clock;

    const GlmFamily& family = env.config().family;
    RunRecord rec;
    rec.rows.reserve(T);
    rec.optimal_margins.reserve(T);
    rec.summary.kappa_analytic = family.bounds(env.config().S).kappa;
    double min_slope = std::numeric_limits<double>::infinity();
    double cum = 0.0;
    std::int64_t wall = 0;

    for (std::size_t t = 1; t <= T; ++t) {
        if (hook) hook(t);
        const ActionSet& arms = env.gen_action_set(t);
        const auto opt = env.optimal_action(arms);
        if (!env.uses_listed_means()) {
            const Vector margins = arms.transpose() * env.theta_star();
            for (Eigen::Index k = 0; k < margins.size(); ++k) min_slope = std::min(min_slope, family.mu_prime(margins(k)));
            rec.optimal_margins.push_back(margins(static_cast<Eigen::Index>(opt.index)));
        }

        RoundRow row;
        row.t = t;
        row.beta = policy.current_beta();
        const auto start = clock::now();
        const Selection sel = policy.select(arms);
        const auto mid = clock::now();
        const Vector x = arms.col(static_cast<Eigen::Index>(sel.index));
        const double r = env.pull(sel.index);
        const auto resume = clock::now();
        policy.observe(x, r);
        const auto stop = clock::now();

        row.arm = sel.index;
        row.reward = r;
        row.inst_regret = opt.mean - env.mean_reward(sel.index);
        cum += row.inst_regret;
        row.cum_regret = cum;
        row.round_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>((mid - start) + (stop - resume)).count();
        wall += row.round_time_ns;
        rec.rows.push_back(row);
    }

    rec.summary.total_regret = cum;
    rec.summary.wall_time_ns = wall;
    rec.summary.warnings = policy.warnings();
    if (!env.uses_listed_means()) {
        rec.summary.kappa_empirical = 1.0 / min_slope;
        rec.summary.kappa_star = kappa_star_empirical(family, rec.optimal_margins);
    } else {
        rec.summary.kappa_empirical = std::numeric_limits<double>::quiet_NaN();
        rec.summary.kappa_star = std::numeric_limits<double>::quiet_NaN();
    }
    return rec;
}

}  // namespace glb
