#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "glb/env.hpp"
#include "glb/policies.hpp"
#include "glb/verify.hpp"

namespace glb {
namespace {

ActionSet arms_of(std::initializer_list<Vector> xs)
{
    ActionSet a(xs.begin()->size(), static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (const auto& x : xs) a.col(k++) = x;
    return a;
}

TEST(OptimisticSelect, LargerBonusWins)
{
    const auto s = optimistic_select(arms_of({Vector{{1.0, 0.0}}, Vector{{0.5, 0.0}}}), Vector::Zero(2),
                                     Matrix::Identity(2, 2), 1.0);
    EXPECT_EQ(s.index, 0u);
    EXPECT_DOUBLE_EQ(s.score, 1.0);
}

TEST(OptimisticSelect, ZeroRadiusExploits)
{
    const auto s = optimistic_select(arms_of({Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}}), Vector{{1.0, 0.0}},
                                     Matrix::Identity(2, 2), 0.0);
    EXPECT_EQ(s.index, 0u);
}

TEST(OptimisticSelect, BonusOutweighsPayoff)
{
    // scores 1 + 2*0.2 = 1.4 and 0 + 2*1 = 2
    const Matrix H_inv = Vector{{0.04, 1.0}}.asDiagonal();
    const auto s = optimistic_select(arms_of({Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}}), Vector{{1.0, 0.0}}, H_inv, 2.0);
    EXPECT_EQ(s.index, 1u);
    EXPECT_NEAR(s.score, 2.0, 1e-15);
    const Vector x0{{1.0, 0.0}};
    EXPECT_NEAR(x0.dot(x0) + 2.0 * std::sqrt(x0.dot(H_inv * x0)), 1.4, 1e-15);
}

TEST(OptimisticSelect, TiesGoToLowestIndex)
{
    const Vector x{{0.0, 1.0}};
    const auto s = optimistic_select(arms_of({Vector{{0.1, 0.0}}, x, x, x}), Vector{{0.0, 1.0}}, Matrix::Identity(2, 2), 0.0);
    EXPECT_EQ(s.index, 1u);
}

TEST(OptimisticSelect, InvariantToPositiveScaling)
{
    oracle::Rng rng(4);
    for (int c = 0; c < 200; ++c) {
        ActionSet arms(3, 8);
        for (int k = 0; k < 8; ++k) arms.col(k) = oracle::random_in_ball(rng, 3, 1.0);
        const Vector theta = oracle::random_in_ball(rng, 3, 2.0);
        const Matrix H_inv = oracle::random_spd(rng, 3, 0.1, 2.0);
        const double beta = oracle::uniform(rng, 0.0, 3.0);
        const double scale = oracle::uniform(rng, 0.01, 100.0);
        ASSERT_EQ(optimistic_select(arms, theta, H_inv, beta).index,
                  optimistic_select(arms, scale * theta, H_inv, scale * beta).index);
    }
}

TEST(OptimisticSelect, ClosedFormEqualsMaxOverEllipsoid)
{
    oracle::Rng rng(10);
    for (int c = 0; c < 100; ++c) {
        const Vector center = oracle::random_in_ball(rng, 2, 2.0);
        const Matrix H = oracle::random_spd(rng, 2, 0.2, 5.0);
        const double beta = oracle::uniform(rng, 0.1, 3.0);
        ActionSet arms(2, 5);
        for (int k = 0; k < 5; ++k) arms.col(k) = oracle::random_in_ball(rng, 2, 1.0);
        const Selection sel = optimistic_select(arms, center, H.inverse(), beta);

        // Sample the ellipsoid boundary densely: theta = center + beta H^{-1/2} u.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
        const Matrix H_inv_sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal()
                                * eig.eigenvectors().transpose();
        double best = -1e300;
        for (int k = 0; k < 5; ++k) {
            const Vector x = arms.col(k);
            for (int i = 0; i < 200'000; ++i) {
                const double a = 2.0 * M_PI * i / 200'000.0;
                const Vector theta = center + beta * H_inv_sqrt * Vector{{std::cos(a), std::sin(a)}};
                best = std::max(best, x.dot(theta));
            }
        }
        ASSERT_NEAR(sel.score, best, 1e-6) << "case " << c;
    }
}

TEST(GlbOmdPolicy, SelectUsesStateAndContracts)
{
    const auto f = GlmFamily::logistic();
    GlbOmdPolicy p(f, 2, configure_params(f, 2, 1.0, 0.1, LambdaMode::practical));
    EXPECT_EQ(p.name(), "glb-omd");
    EXPECT_THROW((void)p.select(ActionSet(2, 0)), ContractViolation);
    EXPECT_THROW((void)p.select(arms_of({Vector{{1.0, 1.0}}, Vector{{0.0, 1.0}}})), ContractViolation);
    EXPECT_THROW((void)p.select(arms_of({Vector{{1.0, 0.0, 0.0}}})), ContractViolation);

    // fresh state: theta=0, H^-1 = I/lambda, so the longer arm wins
    const auto s = p.select(arms_of({Vector{{0.5, 0.0}}, Vector{{0.0, 1.0}}}));
    EXPECT_EQ(s.index, 1u);
    EXPECT_NEAR(s.score, p.current_beta() / std::sqrt(2.0), 1e-12);

    GlbOmdPolicy greedy(f, 2, configure_params(f, 2, 1.0, 0.1, LambdaMode::practical), true);
    EXPECT_EQ(greedy.name(), "greedy");
    EXPECT_EQ(greedy.current_beta(), 0.0);
}

TEST(GlbOmdPolicy, ZeroGradientObserve)
{
    const auto f = GlmFamily::logistic();
    GlbOmdPolicy p(f, 2, configure_params(f, 2, 1.0, 0.1, LambdaMode::practical));
    const Vector x{{0.6, 0.8}};
    const Matrix H = p.state().H();
    p.observe(x, f.mu(0.0));
    EXPECT_EQ(p.state().theta(), Vector::Zero(2));
    EXPECT_LE((p.state().H() - H - 0.25 * x * x.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GlbOmdPolicy, ReplayReconstructsH)
{
    const auto f = GlmFamily::logistic();
    const auto params = configure_params(f, 2, 1.0, 0.1, LambdaMode::practical);
    EnvConfig ec;
    ec.family = f;
    ec.d = 2;
    ec.S = 1.0;
    ec.K = 10;
    BanditEnv env(ec, 2024);
    GlbOmdPolicy p(f, 2, params);

    std::vector<Vector> chosen, next_theta;
    for (std::size_t t = 1; t <= 100; ++t) {
        const ActionSet& arms = env.gen_action_set(t);
        const auto sel = p.select(arms);
        const Vector x = arms.col(static_cast<Eigen::Index>(sel.index));
        p.observe(x, env.pull(sel.index));
        chosen.push_back(x);
        next_theta.push_back(p.state().theta());
    }
    Matrix H = params.lambda * Matrix::Identity(2, 2);
    for (std::size_t s = 0; s < chosen.size(); ++s)
        H += f.mu_prime(chosen[s].dot(next_theta[s])) / f.dispersion() * chosen[s] * chosen[s].transpose();
    EXPECT_LE((H - p.state().H()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GlmUcbPolicy, ScoreExamples)
{
    const auto g = GlmFamily::gaussian();
    GlmUcbPolicy p(g, 2, 5.0, 1.0, 1.0);
    // kappa = 1, d = 2, ln(1 + (e-1)) = 1, V = I, theta_hat = 0
    EXPECT_NEAR(glm_ucb_score(p, Vector{{1.0, 0.0}}, std::exp(1.0) - 1.0), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(glm_ucb_score(p, Vector::Zero(2), 10.0), g.mu(0.0));

    const auto l = GlmFamily::logistic();
    GlmUcbPolicy greedy(l, 2, 3.0, 2.0, 0.0);
    EXPECT_EQ(glm_ucb_score(greedy, Vector{{0.3, 0.4}}, 50.0), l.mu(0.0));
    EXPECT_THROW(GlmUcbPolicy(l, 2, 3.0, 2.0, -1.0), ConfigError);
}

TEST(GlmUcbPolicy, ObserveAppendsAndRefits)
{
    const auto f = GlmFamily::logistic();
    GlmUcbPolicy p(f, 2, 1.0, 2.0);
    EXPECT_FALSE(p.last_fit().has_value());
    EXPECT_EQ(p.round(), 1u);
    p.observe(Vector{{0.6, 0.0}}, 1.0);
    EXPECT_EQ(p.mle().size(), 1u);
    ASSERT_TRUE(p.last_fit().has_value());
    EXPECT_TRUE(p.last_fit()->converged);
    EXPECT_GT(p.mle().theta_hat()(0), 0.0);
    EXPECT_LE((p.design().matrix() - (2.0 * Matrix::Identity(2, 2) + Vector{{0.6, 0.0}} * Vector{{0.6, 0.0}}.transpose()))
                  .cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(p.round(), 2u);
}

TEST(Policies, DeterministicGivenInputs)
{
    for (const std::string name : {"glb-omd", "glm-ucb", "greedy"}) {
        PolicyConfig cfg;
        cfg.name = name;
        cfg.d = 3;
        cfg.S = 2.0;
        auto a = make_policy(cfg);
        auto b = make_policy(cfg);
        oracle::Rng rng(77);
        for (int t = 0; t < 150; ++t) {
            ActionSet arms(3, 6);
            for (int k = 0; k < 6; ++k) arms.col(k) = BanditEnv::random_unit(3, rng);
            const auto sa = a->select(arms);
            const auto sb = b->select(arms);
            ASSERT_EQ(sa.index, sb.index) << name;
            ASSERT_EQ(sa.score, sb.score);
            const double r = (rng() % 2) ? 1.0 : 0.0;
            a->observe(arms.col(static_cast<Eigen::Index>(sa.index)), r);
            b->observe(arms.col(static_cast<Eigen::Index>(sb.index)), r);
        }
    }
}

TEST(Policies, Factory)
{
    PolicyConfig cfg;
    cfg.name = "glm-ucb";
    EXPECT_EQ(make_policy(cfg)->name(), "glm-ucb");
    cfg.name = "gloc";
    EXPECT_THROW((void)make_policy(cfg), ConfigError);
}

}  // namespace
}  // namespace glb
