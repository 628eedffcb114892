#pragma once

// Multi-trial experiment runner, CSV output, configuration round-trip and timing statistics.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "glb/env.hpp"
#include "glb/errors.hpp"
#include "glb/estimators.hpp"
#include "glb/glm.hpp"
#include "glb/policies.hpp"
#include "glb/version.hpp"

namespace glb {

struct ExperimentConfig {
    std::string family = "logistic";
    std::optional<double> dispersion;
    int d = 2;
    double S = 1.0;
    std::size_t T = 1000;
    int K = 20;
    double delta = 0.1;
    std::size_t trials = 10;
    std::vector<std::string> policies{"glb-omd"};
    LambdaMode lambda_mode = LambdaMode::practical;
    double radius_scale = 1.0;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    ArmMode arm_mode = ArmMode::resampled_per_round;
    std::string arm_file;
    std::string out = "results";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

inline std::string format_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value)
{
    std::istringstream is(value);
    T out{};
    if (!(is >> out) || !(is >> std::ws).eof())
        throw ConfigError("bad value '" + value + "' for key '" + key + "'");
    return out;
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

/// Effective configuration as ordered key=value pairs.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& c)
{
    using detail::format_double;
    std::string policies;
    for (const auto& p : c.policies) policies += (policies.empty() ? "" : ",") + p;
    std::vector<std::pair<std::string, std::string>> kv{
        {"family", c.family},
        {"d", std::to_string(c.d)},
        {"S", format_double(c.S)},
        {"T", std::to_string(c.T)},
        {"K", std::to_string(c.K)},
        {"delta", format_double(c.delta)},
        {"trials", std::to_string(c.trials)},
        {"policy", policies},
        {"lambda-mode", std::string(to_string(c.lambda_mode))},
        {"radius-scale", format_double(c.radius_scale)},
        {"seed", std::to_string(c.seed)},
        {"jobs", std::to_string(c.jobs)},
        {"arm-mode", std::string(to_string(c.arm_mode))},
        {"arm-file", c.arm_file},
        {"out", c.out},
    };
    if (c.dispersion) kv.insert(kv.begin() + 1, {"dispersion", format_double(*c.dispersion)});
    return kv;
}

/// Applies one key=value setting. Keys are the long flag names without dashes prefix.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value)
{
    using detail::parse_number;
    if (key == "family") c.family = value;
    else if (key == "dispersion") c.dispersion = parse_number<double>(key, value);
    else if (key == "d") c.d = parse_number<int>(key, value);
    else if (key == "S") c.S = parse_number<double>(key, value);
    else if (key == "T") c.T = parse_number<std::size_t>(key, value);
    else if (key == "K") c.K = parse_number<int>(key, value);
    else if (key == "delta") c.delta = parse_number<double>(key, value);
    else if (key == "trials") c.trials = parse_number<std::size_t>(key, value);
    else if (key == "policy") c.policies = detail::split_list(value);
    else if (key == "lambda-mode") c.lambda_mode = lambda_mode_from_name(value);
    else if (key == "radius-scale") c.radius_scale = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "jobs") c.jobs = parse_number<std::size_t>(key, value);
    else if (key == "arm-mode") c.arm_mode = arm_mode_from_name(value);
    else if (key == "arm-file") c.arm_file = value;
    else if (key == "out") c.out = value;
    else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Flat "key=value" text; '#' starts a comment line. Lines of the form "# key=value" written into
/// summary.csv are accepted when `metadata` is set.
inline void apply_config_text(ExperimentConfig& c, std::istream& in, bool metadata = false)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = detail::trim(line);
        if (metadata) {
            if (body.rfind("# ", 0) != 0) continue;
            body = detail::trim(body.substr(2));
        } else if (body.empty() || body.front() == '#') {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            if (metadata) continue;
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = detail::trim(body.substr(0, eq));
        if (key == "version") continue;
        apply_setting(c, key, detail::trim(body.substr(eq + 1)));
    }
}

inline void validate(const ExperimentConfig& c)
{
    if (c.trials < 1) throw ConfigError("--trials must be at least 1");
    if (c.T < 1) throw ConfigError("--T must be at least 1");
    if (c.d < 1) throw ConfigError("--d must be at least 1");
    if (c.arm_mode != ArmMode::from_file && c.K < 2) throw ConfigError("--K must be at least 2");
    if (!(c.S > 0.0)) throw ConfigError("--S must be positive");
    if (!(c.delta > 0.0 && c.delta <= 1.0)) throw ConfigError("--delta must lie in (0, 1]");
    if (c.jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (!(c.radius_scale >= 0.0)) throw ConfigError("--radius-scale must be nonnegative");
    if (c.policies.empty()) throw ConfigError("at least one --policy is required");
    if (c.arm_mode == ArmMode::from_file && c.arm_file.empty()) throw ConfigError("arm mode 'file' needs --arm-file");
    (void)GlmFamily::from_name(c.family, c.dispersion);
    for (const auto& p : c.policies)
        if (p != "glb-omd" && p != "glm-ucb" && p != "greedy") throw ConfigError("unknown policy '" + p + "'");
}

/// Per-trial seed; trials of different policies share it so they face the same environment.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t trial)
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct TrialOutcome {
    std::optional<RunRecord> record;
    std::string error;
};

struct PolicyResult {
    std::string policy;
    std::vector<TrialOutcome> trials;

    [[nodiscard]] std::size_t failed() const
    {
        return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(),
                                                      [](const TrialOutcome& o) { return !o.record; }));
    }
};

inline EnvConfig make_env_config(const ExperimentConfig& c, const std::optional<ArmFile>& arm_file)
{
    EnvConfig e;
    e.family = GlmFamily::from_name(c.family, c.dispersion);
    e.d = c.d;
    e.S = c.S;
    e.K = c.K;
    e.arm_mode = c.arm_mode;
    e.arm_file = arm_file;
    return e;
}

inline PolicyConfig make_policy_config(const ExperimentConfig& c, const std::string& policy, int d)
{
    PolicyConfig p;
    p.name = policy;
    p.family = GlmFamily::from_name(c.family, c.dispersion);
    p.d = d;
    p.S = c.S;
    p.delta = c.delta;
    p.lambda_mode = c.lambda_mode;
    p.radius_scale = c.radius_scale;
    return p;
}

inline TrialOutcome run_one(const ExperimentConfig& c, const std::string& policy, std::size_t trial,
                            const std::optional<ArmFile>& arm_file)
{
    TrialOutcome out;
    try {
        BanditEnv env(make_env_config(c, arm_file), trial_seed(c.seed, trial));
        auto pol = make_policy(make_policy_config(c, policy, env.config().d));
        out.record = run_trial(*pol, env, c.T);
        for (const auto& row : out.record->rows)
            if (!std::isfinite(row.cum_regret) || !std::isfinite(row.beta))
                throw NumericError("non-finite regret or radius in round " + std::to_string(row.t));
    } catch (const std::exception& e) {
        out.record.reset();
        out.error = e.what();
    }
    return out;
}

/// Runs every (policy, trial) pair on a pool of `c.jobs` threads. Results are ordered by policy,
/// then trial, regardless of completion order.
inline std::vector<PolicyResult> run_experiment(const ExperimentConfig& c)
{
    validate(c);
    std::optional<ArmFile> arm_file;
    if (c.arm_mode == ArmMode::from_file) arm_file = load_arm_file(c.arm_file);

    std::vector<PolicyResult> results;
    for (const auto& p : c.policies) results.push_back({p, std::vector<TrialOutcome>(c.trials)});

    const std::size_t total = c.policies.size() * c.trials;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const std::size_t pi = job / c.trials;
            const std::size_t trial = job % c.trials;
            results[pi].trials[trial] = run_one(c, c.policies[pi], trial, arm_file);
        }
    };
    const std::size_t n_threads = std::min(c.jobs, total);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

inline constexpr const char* kRunCsvHeader = "trial,t,arm,reward,inst_regret,cum_regret,beta,round_time_ns";

inline void write_run_csv(std::ostream& out, const PolicyResult& result)
{
    out << kRunCsvHeader << '\n' << std::setprecision(17);
    for (std::size_t trial = 0; trial < result.trials.size(); ++trial) {
        const auto& rec = result.trials[trial].record;
        if (!rec) continue;
        for (const auto& r : rec->rows)
            out << trial << ',' << r.t << ',' << r.arm << ',' << r.reward << ',' << r.inst_regret << ','
                << r.cum_regret << ',' << r.beta << ',' << r.round_time_ns << '\n';
    }
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

inline Moments moments(const std::vector<double>& v)
{
    Moments m;
    if (v.empty()) return {std::nan(""), std::nan("")};
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

inline void write_summary_csv(std::ostream& out, const ExperimentConfig& c, const std::vector<PolicyResult>& results)
{
    out << "# version=" << kVersion << '\n';
    for (const auto& [k, v] : to_key_values(c)) out << "# " << k << '=' << v << '\n';
    out << "policy,trials,failed,final_regret_mean,final_regret_std,mean_round_time_ns,"
           "kappa_analytic,kappa_empirical,kappa_star,warnings\n";
    out << std::setprecision(10);
    for (const auto& res : results) {
        std::vector<double> finals, times, kemp, kstar;
        double kappa_analytic = std::nan("");
        std::size_t warnings = 0;
        for (const auto& o : res.trials) {
            if (!o.record) continue;
            const auto& s = o.record->summary;
            finals.push_back(s.total_regret);
            times.push_back(static_cast<double>(s.wall_time_ns) / static_cast<double>(o.record->rows.size()));
            kemp.push_back(s.kappa_empirical);
            kstar.push_back(s.kappa_star);
            kappa_analytic = s.kappa_analytic;
            warnings += s.warnings;
        }
        const Moments fr = moments(finals);
        out << res.policy << ',' << res.trials.size() << ',' << res.failed() << ',' << fr.mean << ',' << fr.stddev
            << ',' << moments(times).mean << ',' << kappa_analytic << ',' << moments(kemp).mean << ','
            << moments(kstar).mean << ',' << warnings << '\n';
    }
}

inline std::string run_csv_name(const ExperimentConfig& c, const std::string& policy)
{
    std::ostringstream os;
    os << policy << '_' << c.family << "_d" << c.d << "_S" << c.S << "_T" << c.T << ".csv";
    return os.str();
}

/// Writes one run CSV per policy and summary.csv into `c.out`.
inline void write_outputs(const ExperimentConfig& c, const std::vector<PolicyResult>& results)
{
    namespace fs = std::filesystem;
    fs::create_directories(c.out);
    for (const auto& res : results) {
        std::ofstream f(fs::path(c.out) / run_csv_name(c, res.policy));
        write_run_csv(f, res);
    }
    std::ofstream s(fs::path(c.out) / "summary.csv");
    write_summary_csv(s, c, results);
}

/// Mean cumulative regret curve over successful trials (index t-1).
inline std::vector<double> mean_cum_regret(const PolicyResult& res)
{
    std::vector<double> out;
    std::size_t n = 0;
    for (const auto& o : res.trials) {
        if (!o.record) continue;
        if (out.empty()) out.assign(o.record->rows.size(), 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += o.record->rows[i].cum_regret;
        ++n;
    }
    for (auto& v : out) v /= static_cast<double>(std::max<std::size_t>(n, 1));
    return out;
}

/// Least-squares slope of log(curve[t-1]) against log(t) for t in [t_lo, t_hi].
inline double log_log_slope(const std::vector<double>& curve, std::size_t t_lo, std::size_t t_hi)
{
    t_hi = std::min(t_hi, curve.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t t = std::max<std::size_t>(t_lo, 1); t <= t_hi; ++t) {
        const double y = curve[t - 1];
        if (!(y > 0.0)) continue;
        const double lx = std::log(static_cast<double>(t));
        const double ly = std::log(y);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nan("");
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

struct TimingWindows {
    std::size_t early_begin, early_end, late_begin, late_end;  // inclusive 1-based rounds
};

/// Early window [100, 1100] and late window [T-1000, T] for T >= 2200, else fifths of the run.
inline TimingWindows timing_windows(std::size_t T)
{
    if (T >= 2200) return {100, 1100, T - 1000, T};
    const std::size_t fifth = std::max<std::size_t>(T / 5, 1);
    return {std::min(T, fifth / 4 + 1), std::min(T, fifth / 4 + fifth), T - fifth + 1, T};
}

struct BenchResult {
    std::string policy;
    std::vector<double> round_time_ns;  // mean over repetitions, index t-1
    double early_mean = 0.0;
    double late_mean = 0.0;
    double ratio = 0.0;
};

inline double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end)
{
    double s = 0.0;
    for (std::size_t t = begin; t <= end; ++t) s += v[t - 1];
    return s / static_cast<double>(end - begin + 1);
}

/// Per-round select+observe cost of one policy, averaged over `repetitions` seeded runs.
inline BenchResult bench_policy(const ExperimentConfig& c, const std::string& policy, std::size_t repetitions = 1)
{
    validate(c);
    std::optional<ArmFile> arm_file;
    if (c.arm_mode == ArmMode::from_file) arm_file = load_arm_file(c.arm_file);
    BenchResult b;
    b.policy = policy;
    b.round_time_ns.assign(c.T, 0.0);
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        BanditEnv env(make_env_config(c, arm_file), trial_seed(c.seed, rep));
        auto pol = make_policy(make_policy_config(c, policy, env.config().d));
        const RunRecord rec = run_trial(*pol, env, c.T);
        for (std::size_t i = 0; i < c.T; ++i) b.round_time_ns[i] += static_cast<double>(rec.rows[i].round_time_ns);
    }
    for (auto& v : b.round_time_ns) v /= static_cast<double>(repetitions);
    const TimingWindows w = timing_windows(c.T);
    b.early_mean = window_mean(b.round_time_ns, w.early_begin, w.early_end);
    b.late_mean = window_mean(b.round_time_ns, w.late_begin, w.late_end);
    b.ratio = b.late_mean / b.early_mean;
    return b;
}

}  // namespace glb
