// Acceptance suite: one PASS/FAIL line per criterion, with measured values and wall time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "glb/glb.hpp"

namespace {

using namespace glb;

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_s;
    std::function<Outcome()> check;
};

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome from_suite(const oracle::SuiteResult& r)
{
    return {r.passed, r.passed ? r.summary : r.summary + "; failing case: " + r.failing_case};
}

Outcome formulas()
{
    std::ostringstream os;
    double worst = 0.0;
    auto note = [&](const char* what, double got, double want) {
        const double e = rel_err(got, want);
        worst = std::max(worst, e);
        if (e > 1e-12) os << what << " got " << got << " want " << want << "; ";
    };
    const auto g = configure_params(GlmFamily::gaussian(), 2, 1.0, 0.1, LambdaMode::theory);
    note("gaussian eta", g.eta, 1.0);
    note("gaussian lambda", g.lambda, 2.0);
    const auto l = configure_params(GlmFamily::logistic(), 2, 1.0, 0.1, LambdaMode::theory);
    note("logistic eta", l.eta, 2.0);
    note("logistic lambda", l.lambda, 56.0);
    for (const auto& f : {GlmFamily::logistic(), GlmFamily::poisson(), GlmFamily::gaussian()})
        note("practical lambda", configure_params(f, 3, 1.0, 0.1, LambdaMode::practical).lambda, 3.0);

    // Hand-substituted radii (40-digit reference evaluations).
    auto hand = [](double lambda, double delta) {
        OmdParams p;
        p.lambda = lambda;
        p.S = 1.0;
        p.eta = 1.0;
        p.delta = delta;
        return p;
    };
    const auto gauss = GlmFamily::gaussian();
    note("beta(t=0, delta=1)", beta_radius(hand(1, 1.0), gauss, 2, 0.0), 3.5096675293707442159);
    note("beta(t=100, delta=0.1)", beta_radius(hand(2, 0.1), gauss, 2, 100.0), 8.2525659007001782525);
    const double b1 = beta_radius(hand(1, 1.0), gauss, 2, 0.0), b2 = beta_radius(hand(1, 0.5), gauss, 2, 0.0);
    note("delta identity", b2 * b2 - b1 * b1, 2.0 * std::log(2.0));
    os << "max relative error " << worst;
    return {worst <= 1e-12, os.str()};
}

Outcome coverage()
{
    const auto r = oracle::coverage_experiment(GlmFamily::logistic(), 2, 1.0, 500, 0.1, 100);
    std::ostringstream os;
    os << r.covered << "/" << r.trials << " trials covered at every round (need >= 0.90)";
    return {r.fraction() >= 0.9, os.str()};
}

ExperimentConfig regret_config(const std::string& family, int d, double S, std::size_t T,
                               std::vector<std::string> policies)
{
    ExperimentConfig c;
    c.family = family;
    c.d = d;
    c.S = S;
    c.T = T;
    c.K = 20;
    c.trials = 10;
    c.policies = std::move(policies);
    c.lambda_mode = LambdaMode::practical;
    c.seed = 2024;
    c.jobs = worker_count();
    return c;
}

Outcome sublinear()
{
    const auto c = regret_config("logistic", 3, 3.0, 10'000, {"glb-omd"});
    const auto res = run_experiment(c);
    const auto curve = mean_cum_regret(res[0]);
    const double slope = log_log_slope(curve, 1000, 10'000);
    std::ostringstream os;
    os << "slope " << slope << " over t in [1e3, 1e4] (band [0.35, 0.85]); mean R(1e4) = " << curve.back()
       << "; failed trials " << res[0].failed();
    return {res[0].failed() == 0 && slope >= 0.35 && slope <= 0.85, os.str()};
}

Outcome constant_cost()
{
    ExperimentConfig c = regret_config("logistic", 3, 3.0, 10'000, {"glb-omd"});
    c.trials = 1;
    c.jobs = 1;
    const BenchResult omd = bench_policy(c, "glb-omd", 3);
    c.T = 5000;
    const BenchResult ucb = bench_policy(c, "glm-ucb", 1);
    const auto wo = timing_windows(10'000), wu = timing_windows(5000);
    std::ostringstream os;
    os << "glb-omd [" << wo.early_begin << "," << wo.early_end << "] " << omd.early_mean << " ns vs [" << wo.late_begin
       << "," << wo.late_end << "] " << omd.late_mean << " ns, ratio " << omd.ratio << " (need <= 3); glm-ucb ["
       << wu.early_begin << "," << wu.early_end << "] " << ucb.early_mean << " ns vs [" << wu.late_begin << ","
       << wu.late_end << "] " << ucb.late_mean << " ns, ratio " << ucb.ratio << " (need >= 2)";
    return {omd.ratio <= 3.0 && ucb.ratio >= 2.0, os.str()};
}

Outcome ordering()
{
    const auto c = regret_config("logistic", 3, 3.0, 3000, {"glb-omd", "glm-ucb"});
    const auto res = run_experiment(c);
    const double omd = mean_cum_regret(res[0]).back();
    const double ucb = mean_cum_regret(res[1]).back();
    std::ostringstream os;
    os << "mean final regret glb-omd " << omd << " vs glm-ucb " << ucb << " (need glb-omd <= glm-ucb); glm-ucb "
       << "non-converged fits " << [&] {
              std::size_t w = 0;
              for (const auto& t : res[1].trials)
                  if (t.record) w += t.record->summary.warnings;
              return w;
          }();
    return {res[0].failed() == 0 && res[1].failed() == 0 && omd <= ucb, os.str()};
}

Outcome poisson()
{
    const auto c = regret_config("poisson", 3, 3.0, 3000, {"glb-omd"});
    const auto res = run_experiment(c);
    bool finite = res[0].failed() == 0;
    for (const auto& t : res[0].trials) {
        if (!t.record) continue;
        for (const auto& row : t.record->rows)
            finite = finite && std::isfinite(row.reward) && std::isfinite(row.cum_regret) && std::isfinite(row.beta);
        finite = finite && std::isfinite(t.record->summary.kappa_star);
    }
    const auto curve = mean_cum_regret(res[0]);
    const double slope = log_log_slope(curve, 1000, 3000);
    const bool below = slope <= 0.85, above = slope >= 0.35;
    std::ostringstream os;
    os << "finite " << (finite ? "yes" : "no") << "; mean R(1e3) = " << curve[999] << ", R(3000) = " << curve.back()
       << "; slope over [1e3, 3000] " << slope << ": <= 0.85 " << (below ? "yes" : "no") << ", >= 0.35 "
       << (above ? "yes" : "no");
    return {finite && below && above, os.str()};
}

Outcome gaussian()
{
    const auto f = GlmFamily::gaussian();
    const auto p = configure_params(f, 2, 1.0, 0.1, LambdaMode::theory);

    EnvConfig ec;
    ec.family = f;
    ec.d = 2;
    ec.S = 1.0;
    ec.K = 20;
    BanditEnv env(ec, 3);
    GlbOmdPolicy policy(f, 2, p);
    const RunRecord rec = run_trial(policy, env, 500);

    const auto cov = oracle::coverage_suite(100, 500, 0.1, f, 2, 1.0);
    std::ostringstream os;
    os << "eta " << p.eta << " (R=" << f.self_concordance() << "); kappa* " << rec.summary.kappa_star << "; "
       << cov.summary;
    return {p.eta == 1.0 && f.self_concordance() == 0.0 && rec.summary.kappa_star == 1.0 && cov.passed, os.str()};
}

}  // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {"omd-equivalence (50 logistic cases, d=2, S=2)", 10, [] { return from_suite(oracle::omd_suite(50, 2, 2.0)); }},
        {"projection-kkt (1000 cases, 1e4 feasible samples)", 30,
         [] { return from_suite(oracle::projection_suite(1000, 10'000)); }},
        {"sherman-morrison-drift (d=5, 1e4 updates)", 5,
         [] { return from_suite(oracle::sherman_morrison_suite(10'000, 5)); }},
        {"parameter-formulas", 1, formulas},
        {"coverage (logistic d=2 S=1 T=500 delta=0.1, 100 trials)", 300, coverage},
        {"sublinear-regret (logistic d=3 S=3 K=20 T=1e4, 10 trials)", 600, sublinear},
        {"constant-per-round-cost (d=3 K=20)", 600, constant_cost},
        {"ordering-vs-glm-ucb (logistic S=3 T=3000, 10 trials)", 600, ordering},
        {"poisson-unbounded (S=3 T=3000, 10 trials)", 600, poisson},
        {"gaussian-degeneration", 300, gaussian},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = secs <= c.budget_s;
        const bool ok = o.passed && in_budget;
        if (!ok) ++failures;
        std::printf("%s %s [%.2fs / %.0fs budget%s]: %s\n", ok ? "PASS" : "FAIL", c.name.c_str(), secs, c.budget_s,
                    in_budget ? "" : ", over budget", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
