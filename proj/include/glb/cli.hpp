#pragma once

// Command-line front end: run | verify | bench. Kept in a header so the tests can drive it in-process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glb/errors.hpp"
#include "glb/harness.hpp"
#include "glb/verify.hpp"
#include "glb/version.hpp"

namespace glb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Flag values as given on the command line; unset flags leave the config file / defaults alone.
struct RunFlags {
    std::optional<std::string> family, lambda_mode, arm_file, arm_mode, out, config;
    std::optional<double> dispersion, S, delta, radius_scale;
    std::optional<int> d, K;
    std::optional<std::size_t> T, trials, jobs;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> policies;
};

inline void add_run_flags(CLI::App& app, RunFlags& f)
{
    app.add_option("--family", f.family, "logistic | poisson | gaussian");
    app.add_option("--dispersion", f.dispersion, "Gaussian noise variance g(tau)");
    app.add_option("--d", f.d, "dimension")->check(CLI::PositiveNumber);
    app.add_option("--S", f.S, "parameter norm bound")->check(CLI::PositiveNumber);
    app.add_option("--T", f.T, "horizon")->check(CLI::PositiveNumber);
    app.add_option("--K", f.K, "arms per round")->check(CLI::Range(2, 1 << 20));
    app.add_option("--delta", f.delta, "confidence level in (0,1]")->check(CLI::Range(0.0, 1.0));
    app.add_option("--trials", f.trials, "seeded trials per policy")->check(CLI::PositiveNumber);
    app.add_option("--policy", f.policies, "glb-omd | glm-ucb | greedy (repeatable)")->take_all();
    app.add_option("--lambda-mode", f.lambda_mode, "theory | practical");
    app.add_option("--radius-scale", f.radius_scale, "GLM-UCB radius multiplier")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", f.seed, "base seed (falls back to $GLB_OMD_SEED)");
    app.add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--arm-file", f.arm_file, "arm file; switches the arm mode to 'file'");
    app.add_option("--arm-mode", f.arm_mode, "fixed | resampled | file");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--config", f.config, "flat key=value configuration file");
}

/// defaults < config file < $GLB_OMD_SEED (seed only, when neither sets it) < flags.
inline ExperimentConfig resolve_config(const RunFlags& f)
{
    ExperimentConfig c;
    bool seed_from_file = false;
    if (f.config) {
        std::ifstream in(*f.config);
        if (!in) throw ConfigError("cannot open config file '" + *f.config + "'");
        ExperimentConfig probe;
        probe.seed = ~std::uint64_t{0};
        std::ifstream again(*f.config);
        apply_config_text(probe, again);
        seed_from_file = probe.seed != ~std::uint64_t{0};
        apply_config_text(c, in);
    }
    if (!f.seed && !seed_from_file) {
        if (const char* env = std::getenv("GLB_OMD_SEED")) apply_setting(c, "seed", env);
    }
    if (f.family) c.family = *f.family;
    if (f.dispersion) c.dispersion = *f.dispersion;
    if (f.d) c.d = *f.d;
    if (f.S) c.S = *f.S;
    if (f.T) c.T = *f.T;
    if (f.K) c.K = *f.K;
    if (f.delta) c.delta = *f.delta;
    if (f.trials) c.trials = *f.trials;
    if (!f.policies.empty()) c.policies = f.policies;
    if (f.lambda_mode) c.lambda_mode = lambda_mode_from_name(*f.lambda_mode);
    if (f.radius_scale) c.radius_scale = *f.radius_scale;
    if (f.seed) c.seed = *f.seed;
    if (f.jobs) c.jobs = *f.jobs;
    if (f.arm_mode) c.arm_mode = arm_mode_from_name(*f.arm_mode);
    if (f.arm_file) {
        c.arm_file = *f.arm_file;
        if (!f.arm_mode) c.arm_mode = ArmMode::from_file;
    }
    if (f.out) c.out = *f.out;
    validate(c);
    return c;
}

inline int run_command(const RunFlags& flags, std::ostream& out, std::ostream& err)
{
    ExperimentConfig c;
    try {
        c = resolve_config(flags);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const LoadError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    std::vector<PolicyResult> results;
    try {
        results = run_experiment(c);
    } catch (const LoadError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    write_outputs(c, results);

    std::size_t ok = 0;
    for (const auto& r : results) {
        ok += r.trials.size() - r.failed();
        for (std::size_t i = 0; i < r.trials.size(); ++i)
            if (!r.trials[i].record) err << r.policy << " trial " << i << " failed: " << r.trials[i].error << '\n';
        const auto curve = mean_cum_regret(r);
        out << r.policy << ": " << (r.trials.size() - r.failed()) << '/' << r.trials.size() << " trials, mean final regret "
            << (curve.empty() ? std::nan("") : curve.back()) << '\n';
    }
    out << "wrote " << (std::filesystem::path(c.out) / "summary.csv").string() << '\n';
    return ok == 0 ? kExitFailure : kExitOk;
}

struct VerifyFlags {
    std::vector<std::string> suites;
    std::optional<std::size_t> cases, trials, T;
    double delta = 0.1;
};

inline int verify_command(const VerifyFlags& f, std::ostream& out)
{
    static const std::vector<std::string> all{"projection", "omd", "sherman-morrison", "mle", "coverage"};
    const std::vector<std::string> suites = f.suites.empty() ? all : f.suites;
    bool all_passed = true;
    for (const auto& s : suites) {
        oracle::SuiteResult r;
        if (s == "projection") r = oracle::projection_suite(f.cases.value_or(1000));
        else if (s == "omd") r = oracle::omd_suite(f.cases.value_or(50));
        else if (s == "sherman-morrison") r = oracle::sherman_morrison_suite(f.cases.value_or(10'000));
        else if (s == "mle") r = oracle::mle_suite(f.cases.value_or(3));
        else if (s == "coverage") r = oracle::coverage_suite(f.trials.value_or(20), f.T.value_or(200), f.delta);
        else {
            out << "unknown suite '" << s << "'\n";
            return kExitUsage;
        }
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.summary << '\n';
        if (!r.passed) out << "  failing case: " << r.failing_case << '\n';
        all_passed = all_passed && r.passed;
    }
    return all_passed ? kExitOk : kExitFailure;
}

struct BenchFlags {
    RunFlags run;
    std::size_t T_baseline = 5000;
    std::size_t repetitions = 1;
};

inline int bench_command(const BenchFlags& f, std::ostream& out, std::ostream& err)
{
    RunFlags rf = f.run;
    if (!rf.T) rf.T = 10'000;
    if (!rf.d) rf.d = 3;
    if (!rf.S) rf.S = 3.0;
    if (!rf.out) rf.out = "bench";
    if (rf.policies.empty()) rf.policies = {"glb-omd", "glm-ucb"};
    ExperimentConfig c;
    try {
        c = resolve_config(rf);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    namespace fs = std::filesystem;
    fs::create_directories(c.out);
    std::ofstream timing(fs::path(c.out) / "bench_timing.csv");
    std::ofstream summary(fs::path(c.out) / "bench_summary.csv");
    timing << "policy,t,round_time_ns\n";
    summary << "# version=" << kVersion << '\n' << "# seed=" << c.seed << '\n';
    summary << "policy,T,early_begin,early_end,late_begin,late_end,early_mean_ns,late_mean_ns,ratio\n";
    for (const auto& p : c.policies) {
        ExperimentConfig pc = c;
        if (p == "glm-ucb" && !f.run.T) pc.T = f.T_baseline;
        const BenchResult b = bench_policy(pc, p, f.repetitions);
        const TimingWindows w = timing_windows(pc.T);
        for (std::size_t t = 1; t <= b.round_time_ns.size(); ++t)
            timing << p << ',' << t << ',' << b.round_time_ns[t - 1] << '\n';
        summary << p << ',' << pc.T << ',' << w.early_begin << ',' << w.early_end << ',' << w.late_begin << ','
                << w.late_end << ',' << b.early_mean << ',' << b.late_mean << ',' << b.ratio << '\n';
        out << p << " T=" << pc.T << ": early " << b.early_mean << " ns, late " << b.late_mean << " ns, ratio "
            << b.ratio << '\n';
    }
    return kExitOk;
}

/// Entry point shared by the executable and the tests.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Generalized linear bandits with one-pass online mirror descent", "glb_omd"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run = app.add_subcommand("run", "run an experiment matrix and write CSV output");
    add_run_flags(*run, run_flags);

    VerifyFlags verify_flags;
    auto* verify = app.add_subcommand("verify", "run the oracle verification suites");
    verify->add_option("--suite", verify_flags.suites, "projection | omd | sherman-morrison | mle | coverage")->take_all();
    verify->add_option("--cases", verify_flags.cases, "cases / updates for the selected suites");
    verify->add_option("--trials", verify_flags.trials, "coverage trials")->check(CLI::PositiveNumber);
    verify->add_option("--T", verify_flags.T, "coverage horizon")->check(CLI::PositiveNumber);
    verify->add_option("--delta", verify_flags.delta, "coverage confidence level")->check(CLI::Range(0.0, 1.0));

    BenchFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "per-round timing of GLB-OMD vs GLM-UCB");
    add_run_flags(*bench, bench_flags.run);
    bench->add_option("--policies", bench_flags.run.policies, "policies to time")->take_all();
    bench->add_option("--T-baseline", bench_flags.T_baseline, "horizon for glm-ucb when --T is not given")
        ->check(CLI::PositiveNumber);
    bench->add_option("--reps", bench_flags.repetitions, "seeded repetitions averaged per round")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return run_command(run_flags, out, err);
        if (*verify) return verify_command(verify_flags, out);
        if (*bench) return bench_command(bench_flags, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace glb::cli
