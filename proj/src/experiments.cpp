#include "cfmdp/experiments.hpp"

#include "cfmdp/errors.hpp"
#include "cfmdp/gumbel_scm.hpp"
#include "cfmdp/interval_vi.hpp"
#include "cfmdp/random.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

namespace cfmdp {

namespace {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are written by
/// index, so the outcome does not depend on the schedule.
template <class Fn> void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; !failed && (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};

Stats stats(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        s.se = s.sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return s;
}

std::shared_ptr<const Mdp> shared_env(const RunConfig& cfg) {
    validate_config(cfg);
    return std::make_shared<const Mdp>(build_environment(cfg));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

void validate_config(const RunConfig& cfg) {
    if (cfg.env != "toy" && cfg.env != "gridworld" && cfg.env != "frozen_lake") {
        throw InvalidInput("unknown env '" + cfg.env + "' (expected toy, gridworld or frozen_lake)");
    }
    if (cfg.num_paths < 1 || cfg.horizon < 1 || cfg.num_cf_samples < 1 || cfg.rollouts < 1 ||
        cfg.gumbel_samples < 1 || cfg.threads < 1) {
        throw InvalidInput("num_paths, horizon, num_cf_samples, rollouts, gumbel_samples and "
                           "threads must all be at least 1");
    }
    validate_grid_spec(cfg.grid);
}

RunConfig run_config_from_json(const Json& j) {
    RunConfig cfg;
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    try {
        if (j.contains("env")) {
            const Json& env = j.at("env");
            if (env.is_string()) {
                cfg.env = env.get<std::string>();
            } else {
                cfg.env = env.value("name", cfg.env);
                if (env.contains("params")) cfg.grid = grid_spec_from_json(env.at("params"));
            }
        }
        if (j.contains("grid")) cfg.grid = grid_spec_from_json(j.at("grid"));
        if (j.contains("assumptions")) {
            cfg.assumptions = parse_assumptions(j.at("assumptions").get<std::string>());
        }
        cfg.num_paths = j.value("num_paths", cfg.num_paths);
        cfg.horizon = j.value("horizon", cfg.horizon);
        cfg.num_cf_samples = j.value("num_cf_samples", cfg.num_cf_samples);
        cfg.rollouts = j.value("rollouts", cfg.rollouts);
        cfg.gumbel_samples = j.value("gumbel_samples", cfg.gumbel_samples);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.threads = j.value("threads", cfg.threads);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
    return Json{{"env", {{"name", cfg.env}, {"params", grid_spec_to_json(cfg.grid)}}},
                {"assumptions", std::string(to_string(cfg.assumptions))},
                {"num_paths", cfg.num_paths},
                {"horizon", cfg.horizon},
                {"num_cf_samples", cfg.num_cf_samples},
                {"rollouts", cfg.rollouts},
                {"gumbel_samples", cfg.gumbel_samples},
                {"seed", cfg.seed},
                {"output_dir", cfg.output_dir},
                {"threads", cfg.threads}};
}

Mdp build_environment(const RunConfig& cfg) {
    if (cfg.env == "toy") return build_toy_mdp();
    if (cfg.env == "gridworld") return build_gridworld(cfg.grid);
    if (cfg.env == "frozen_lake") return build_frozen_lake();
    throw InvalidInput("unknown env '" + cfg.env + "'");
}

double ExperimentReport::summary_value(const std::string& name) const {
    for (const auto& [key, value] : summary) {
        if (key == name) return value;
    }
    throw PreconditionViolation("report " + experiment + " has no summary field " + name);
}

std::uint64_t trial_seed(const RunConfig& cfg, std::size_t trial) {
    return derive_seed(cfg.seed, {trial});
}

ObservedPath behavioural_path(const Mdp& m, const RunConfig& cfg, std::size_t trial) {
    const std::uint64_t seed = trial_seed(cfg, trial);
    const auto policy = random_policy(m.num_states, m.num_actions, cfg.horizon, derive_seed(seed, {1}));
    return sample_path(m, policy, cfg.horizon, derive_seed(seed, {2}));
}

ExperimentReport run_ope(const RunConfig& cfg) {
    const auto m = shared_env(cfg);
    const auto target = solve_finite_horizon(*m, cfg.horizon).policy;
    const double true_value = initial_value(*m, exact_policy_value(*m, target, cfg.horizon));

    const std::size_t n = cfg.num_paths;
    std::vector<double> pess(n), opt(n), gumbel(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const auto path = behavioural_path(*m, cfg, i);
        const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
        const State s0 = path.states.front();
        pess[i] = robust_policy_eval(icf, target, ValueMode::Pessimistic).at(0, s0);
        opt[i] = robust_policy_eval(icf, target, ValueMode::Optimistic).at(0, s0);
        const auto cf = build_gumbel_cfmdp(*m, path, cfg.gumbel_samples,
                                           derive_seed(trial_seed(cfg, i), {3}));
        gumbel[i] = evaluate_schedule(*m, cf.transition, target).at(0, s0);
    });

    ExperimentReport report{"ope", {}, {}};
    double sum_p = 0.0, sum_o = 0.0, sum_g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_p += pess[i];
        sum_o += opt[i];
        sum_g += gumbel[i];
        const double k = static_cast<double>(i + 1);
        report.records.push_back({"ope", i, trial_seed(cfg, i),
                                  {{"pessimistic", pess[i]},
                                   {"optimistic", opt[i]},
                                   {"gumbel", gumbel[i]},
                                   {"true_value", true_value},
                                   {"avg_pessimistic", sum_p / k},
                                   {"avg_optimistic", sum_o / k},
                                   {"avg_gumbel", sum_g / k}}});
    }
    const Stats sp = stats(pess), so = stats(opt), sg = stats(gumbel);
    report.summary = {{"true_value", true_value},  {"mean_pessimistic", sp.mean},
                      {"se_pessimistic", sp.se},   {"mean_optimistic", so.mean},
                      {"se_optimistic", so.se},    {"mean_gumbel", sg.mean},
                      {"se_gumbel", sg.se},        {"num_paths", static_cast<double>(n)}};
    return report;
}

ExperimentReport run_robustness(const RunConfig& cfg) {
    const auto m = shared_env(cfg);
    const std::size_t n = cfg.num_paths;
    std::vector<double> robust(n), gumbel(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const auto path = behavioural_path(*m, cfg, i);
        const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
        const State s0 = path.states.front();
        const auto rs = robust_value_iteration(icf, ValueMode::Pessimistic);
        const auto cf = build_gumbel_cfmdp(*m, path, cfg.gumbel_samples,
                                           derive_seed(trial_seed(cfg, i), {3}));
        const auto gp = gumbel_policy(*m, cf).policy;
        robust[i] = robust_policy_eval(icf, rs.policy, ValueMode::Pessimistic).at(0, s0);
        gumbel[i] = robust_policy_eval(icf, gp, ValueMode::Pessimistic).at(0, s0);
    });

    ExperimentReport report{"robustness", {}, {}};
    std::vector<double> gaps(n);
    std::size_t dominated = 0;
    for (std::size_t i = 0; i < n; ++i) {
        gaps[i] = robust[i] - gumbel[i];
        if (robust[i] >= gumbel[i] - 1e-9) ++dominated;
        report.records.push_back({"robustness", i, trial_seed(cfg, i),
                                  {{"icfmdp_worst_case", robust[i]},
                                   {"gumbel_worst_case", gumbel[i]},
                                   {"gap", gaps[i]}}});
    }
    const Stats sr = stats(robust), sg = stats(gumbel), sgap = stats(gaps);
    report.summary = {{"mean_icfmdp", sr.mean}, {"sd_icfmdp", sr.sd},     {"se_icfmdp", sr.se},
                      {"mean_gumbel", sg.mean}, {"sd_gumbel", sg.sd},     {"se_gumbel", sg.se},
                      {"mean_gap", sgap.mean},  {"dominance_fraction", static_cast<double>(dominated) / n},
                      {"num_paths", static_cast<double>(n)}};
    return report;
}

std::vector<WidthTriple> bound_width_triples(const Mdp& m, const RunConfig& cfg,
                                             std::size_t trial) {
    const auto path = behavioural_path(m, cfg, trial);
    const auto shared = std::make_shared<const Mdp>(m);
    const auto none = build_interval_cfmdp(shared, path, AssumptionSet::NoAssumptions);
    const auto cs = build_interval_cfmdp(shared, path, AssumptionSet::CsOnly);
    const auto csm = build_interval_cfmdp(shared, path, AssumptionSet::CsAndMonotonicity);
    std::vector<WidthTriple> out;
    out.reserve(none.intervals.size());
    for (std::size_t t = 0; t < path.length(); ++t) {
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                for (State next = 0; next < m.num_states; ++next) {
                    out.push_back({trial, t, s, a, next, none.at(t, s, a, next).width(),
                                   cs.at(t, s, a, next).width(), csm.at(t, s, a, next).width()});
                }
            }
        }
    }
    return out;
}

ExperimentReport run_bound_stats(const RunConfig& cfg) {
    const auto m = shared_env(cfg);
    const std::size_t n = cfg.num_paths;
    struct PathWidths {
        double mean[3] = {0, 0, 0};
        double count[3] = {0, 0, 0};
        double nesting_violations = 0;
    };
    std::vector<PathWidths> per_path(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const auto path = behavioural_path(*m, cfg, i);
        IntervalCfMdp icf[3];
        for (int k = 0; k < 3; ++k) icf[k] = build_interval_cfmdp(m, path, kAllAssumptionSets[k]);
        PathWidths& pw = per_path[i];
        double sum[3] = {0, 0, 0};
        for (std::size_t t = 0; t < path.length(); ++t) {
            // Once the terminal is reached every later step is the same trivial observation.
            if (is_absorbing_terminal(*m, path.states[t])) continue;
            for (std::size_t idx = icf[0].row_offset(t, 0, 0); idx < icf[0].row_offset(t + 1, 0, 0);
                 ++idx) {
                double w[3];
                for (int k = 0; k < 3; ++k) {
                    const auto& iv = icf[k].intervals[idx];
                    w[k] = iv.width();
                    if (iv.ub > 0.0) {
                        sum[k] += w[k];
                        pw.count[k] += 1;
                    }
                }
                if (w[2] > w[1] + 1e-12 || w[1] > w[0] + 1e-12) pw.nesting_violations += 1;
            }
        }
        for (int k = 0; k < 3; ++k) pw.mean[k] = pw.count[k] > 0 ? sum[k] / pw.count[k] : 0.0;
    });

    ExperimentReport report{"boundstats", {}, {}};
    std::vector<double> widths[3];
    double violations = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pw = per_path[i];
        for (int k = 0; k < 3; ++k) {
            if (pw.count[k] > 0) widths[k].push_back(pw.mean[k]);
        }
        violations += pw.nesting_violations;
        report.records.push_back({"boundstats", i, trial_seed(cfg, i),
                                  {{"width_none", pw.mean[0]},
                                   {"width_cs", pw.mean[1]},
                                   {"width_cs_mon", pw.mean[2]},
                                   {"count_none", pw.count[0]},
                                   {"count_cs", pw.count[1]},
                                   {"count_cs_mon", pw.count[2]},
                                   {"nesting_violations", pw.nesting_violations}}});
    }
    const Stats s0 = stats(widths[0]), s1 = stats(widths[1]), s2 = stats(widths[2]);
    report.summary = {{"mean_width_none", s0.mean},   {"sd_width_none", s0.sd},
                      {"mean_width_cs", s1.mean},     {"sd_width_cs", s1.sd},
                      {"mean_width_cs_mon", s2.mean}, {"sd_width_cs_mon", s2.sd},
                      {"nesting_violations", violations},
                      {"num_paths", static_cast<double>(n)}};
    return report;
}

ExperimentReport run_timing(const RunConfig& cfg) {
    const auto m = shared_env(cfg);
    ExperimentReport report{"timing", {}, {}};
    std::vector<double> icf_times, gumbel_times;
    // Sequential on purpose: concurrent trials would distort wall-clock times.
    for (std::size_t i = 0; i < cfg.num_paths; ++i) {
        const auto path = behavioural_path(*m, cfg, i);
        auto start = std::chrono::steady_clock::now();
        const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
        const double icf_seconds = seconds_since(start);
        start = std::chrono::steady_clock::now();
        const auto cf = build_gumbel_cfmdp(*m, path, cfg.gumbel_samples,
                                           derive_seed(trial_seed(cfg, i), {3}));
        const double gumbel_seconds = seconds_since(start);
        icf_times.push_back(icf_seconds);
        gumbel_times.push_back(gumbel_seconds);
        report.records.push_back({"timing", i, trial_seed(cfg, i),
                                  {{"icfmdp_seconds", icf_seconds},
                                   {"gumbel_seconds", gumbel_seconds},
                                   {"gumbel_samples", static_cast<double>(cfg.gumbel_samples)},
                                   {"intervals", static_cast<double>(icf.intervals.size())},
                                   {"gumbel_rows", static_cast<double>(cf.transition.probs.size())}}});
    }
    const Stats si = stats(icf_times), sg = stats(gumbel_times);
    report.summary = {{"mean_icfmdp_seconds", si.mean},
                      {"mean_gumbel_seconds", sg.mean},
                      {"speedup", si.mean > 0.0 ? sg.mean / si.mean
                                                : std::numeric_limits<double>::infinity()},
                      {"gumbel_samples", static_cast<double>(cfg.gumbel_samples)},
                      {"num_paths", static_cast<double>(cfg.num_paths)}};
    return report;
}

ExperimentReport run_cf_traces(const RunConfig& cfg) {
    const auto m = shared_env(cfg);
    const std::size_t n = cfg.num_paths;
    const std::size_t H = cfg.horizon;
    struct TraceResult {
        std::vector<double> sum[2], sum_sq[2];
        double min_return[2] = {std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
        double total_return[2] = {0.0, 0.0};
        double violations = 0;
        double count = 0;
    };
    std::vector<TraceResult> results(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const std::uint64_t seed = trial_seed(cfg, i);
        const auto path = behavioural_path(*m, cfg, i);
        const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
        const PolicySchedule policies[2] = {
            robust_value_iteration(icf, ValueMode::Pessimistic).policy,
            gumbel_policy(*m, build_gumbel_cfmdp(*m, path, cfg.gumbel_samples, derive_seed(seed, {3})))
                .policy};
        TraceResult& r = results[i];
        for (int k = 0; k < 2; ++k) {
            r.sum[k].assign(H, 0.0);
            r.sum_sq[k].assign(H, 0.0);
        }
        for (std::size_t c = 0; c < cfg.num_cf_samples; ++c) {
            const auto sampled = sample_cfmdp(icf, derive_seed(seed, {4, c}));
            for (std::size_t idx = 0; idx < icf.intervals.size(); ++idx) {
                if (!icf.intervals[idx].contains(sampled.transition.probs[idx], 1e-12)) {
                    r.violations += 1;
                }
            }
            for (int k = 0; k < 2; ++k) {
                Rng rng = make_rng(derive_seed(seed, {5, c, static_cast<std::uint64_t>(k)}));
                for (std::size_t roll = 0; roll < cfg.rollouts; ++roll) {
                    const auto ro = rollout_schedule(*m, sampled.transition, policies[k],
                                                     path.states.front(), rng);
                    for (std::size_t t = 0; t < H; ++t) {
                        r.sum[k][t] += ro.rewards[t];
                        r.sum_sq[k][t] += ro.rewards[t] * ro.rewards[t];
                    }
                    r.min_return[k] = std::min(r.min_return[k], ro.total);
                    r.total_return[k] += ro.total;
                }
            }
        }
        r.count = static_cast<double>(cfg.num_cf_samples * cfg.rollouts);
    });

    ExperimentReport report{"traces", {}, {}};
    double min_return[2] = {std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity()};
    double mean_return[2] = {0.0, 0.0};
    double violations = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = results[i];
        for (std::size_t t = 0; t < H; ++t) {
            Metrics metrics{{"t", static_cast<double>(t)}};
            const char* names[2] = {"icfmdp", "gumbel"};
            for (int k = 0; k < 2; ++k) {
                const double mean = r.sum[k][t] / r.count;
                const double var = std::max(0.0, r.sum_sq[k][t] / r.count - mean * mean);
                metrics.emplace_back(std::string(names[k]) + "_mean", mean);
                metrics.emplace_back(std::string(names[k]) + "_std", std::sqrt(var));
            }
            metrics.emplace_back("icfmdp_min_return", r.min_return[0]);
            metrics.emplace_back("gumbel_min_return", r.min_return[1]);
            report.records.push_back({"traces", i, trial_seed(cfg, i), std::move(metrics)});
        }
        for (int k = 0; k < 2; ++k) {
            min_return[k] = std::min(min_return[k], r.min_return[k]);
            mean_return[k] += r.total_return[k] / r.count / static_cast<double>(n);
        }
        violations += r.violations;
    }
    report.summary = {{"icfmdp_min_return", min_return[0]},
                      {"gumbel_min_return", min_return[1]},
                      {"icfmdp_mean_return", mean_return[0]},
                      {"gumbel_mean_return", mean_return[1]},
                      {"sample_violations", violations},
                      {"num_paths", static_cast<double>(n)}};
    return report;
}

void write_report_csv(const std::filesystem::path& file, const ExperimentReport& report,
                      const std::string& run_id) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    const bool fresh = !std::filesystem::exists(file) || std::filesystem::file_size(file) == 0;
    std::ofstream out(file, std::ios::app);
    if (!out) throw InvalidInput("cannot write " + file.string());
    if (fresh) {
        out << "run_id,experiment,trial,path_seed";
        if (!report.records.empty()) {
            for (const auto& [name, value] : report.records.front().metrics) out << ',' << name;
        }
        out << '\n';
    }
    out << std::setprecision(12);
    for (const auto& rec : report.records) {
        out << run_id << ',' << rec.experiment << ',' << rec.trial << ',' << rec.path_seed;
        for (const auto& [name, value] : rec.metrics) out << ',' << value;
        out << '\n';
    }
}

Json report_summary_json(const ExperimentReport& report, const RunConfig& cfg,
                         const std::string& run_id) {
    Json summary = Json::object();
    for (const auto& [name, value] : report.summary) summary[name] = value;
    return Json{{"run_id", run_id},
                {"experiment", report.experiment},
                {"config", run_config_to_json(cfg)},
                {"summary", std::move(summary)}};
}

std::string make_run_id(std::uint64_t seed) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    std::ostringstream id;
    id << "s" << seed << "-" << std::hex << (mix_seed(static_cast<std::uint64_t>(ms) ^ seed) & 0xffffffu);
    return id.str();
}

} // namespace cfmdp
