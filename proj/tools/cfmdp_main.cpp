// cfmdp: counterfactual bounds, verification and experiments from the command line.
//
// Exit codes: 0 success, 1 configuration or input error, 2 invariant violation.

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/coupling_oracle.hpp"
#include "cfmdp/environments.hpp"
#include "cfmdp/errors.hpp"
#include "cfmdp/experiments.hpp"
#include "cfmdp/gumbel_scm.hpp"
#include "cfmdp/interval_vi.hpp"
#include "cfmdp/serialization.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using namespace cfmdp;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

struct Options {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out;
    std::string assumptions;
    std::string env;
    std::optional<double> p;
    std::optional<std::size_t> paths, horizon, gumbel_samples, cf_samples, rollouts, threads;

    // single-path commands
    std::string mdp_file;
    std::string path_file;
    std::size_t trial = 0;
    std::string mode = "pessimistic";
    double tolerance = 1e-8;
};

RunConfig resolve_config(const Options& o) {
    RunConfig cfg;
    if (!o.config.empty()) cfg = run_config_from_json(read_json_file(o.config));
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.assumptions.empty()) cfg.assumptions = parse_assumptions(o.assumptions);
    if (!o.env.empty()) cfg.env = o.env;
    if (o.p) cfg.grid.p_intended = *o.p;
    if (o.paths) cfg.num_paths = *o.paths;
    if (o.horizon) cfg.horizon = *o.horizon;
    if (o.gumbel_samples) cfg.gumbel_samples = *o.gumbel_samples;
    if (o.cf_samples) cfg.num_cf_samples = *o.cf_samples;
    if (o.rollouts) cfg.rollouts = *o.rollouts;
    if (o.threads) cfg.threads = *o.threads;
    validate_config(cfg);
    return cfg;
}

Mdp resolve_mdp(const Options& o, const RunConfig& cfg) {
    if (!o.mdp_file.empty()) return mdp_from_json(read_json_file(o.mdp_file));
    return build_environment(cfg);
}

ObservedPath resolve_path(const Options& o, const Mdp& m, const RunConfig& cfg) {
    ObservedPath path = o.path_file.empty() ? behavioural_path(m, cfg, o.trial)
                                            : path_from_json(read_json_file(o.path_file));
    require_valid_path(m, path);
    return path;
}

/// Writes to <out>/<name> when --out is given, else to stdout.
void emit_json(const Options& o, const std::string& name, const Json& j) {
    if (o.out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        write_json_file(fs::path(o.out) / name, j);
        std::cerr << "wrote " << (fs::path(o.out) / name).string() << '\n';
    }
}

int cmd_env(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    Json j = mdp_to_json(build_environment(cfg));
    emit_json(o, cfg.env + ".json", j);
    return 0;
}

int cmd_bounds(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const Mdp m = resolve_mdp(o, cfg);
    const auto path = resolve_path(o, m, cfg);
    const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
    if (o.out.empty()) {
        std::cout << icfmdp_to_json(icf).dump(2) << '\n';
        return 0;
    }
    write_json_file(fs::path(o.out) / "icfmdp.json", icfmdp_to_json(icf));
    std::ofstream csv(fs::path(o.out) / "icfmdp.csv");
    write_icfmdp_csv(csv, icf);
    std::cerr << "wrote icfmdp.json and icfmdp.csv to " << o.out << '\n';
    return 0;
}

int cmd_verify(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const Mdp m = resolve_mdp(o, cfg);
    const auto path = resolve_path(o, m, cfg);
    const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);

    std::ofstream file;
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        file.open(fs::path(o.out) / "verify.csv");
    }
    std::ostream& out = o.out.empty() ? std::cout : file;
    out << "t,s,a,s_next,closed_lb,lp_lb,closed_ub,lp_ub,delta\n" << std::setprecision(17);
    double worst = 0.0;
    for (std::size_t t = 0; t < icf.horizon; ++t) {
        const auto obs = path.step(t);
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                for (State next = 0; next < m.num_states; ++next) {
                    const auto closed = icf.at(t, s, a, next);
                    const auto lp = oracle_bounds(m, obs, {s, a}, next, cfg.assumptions);
                    const double delta =
                        std::max(std::abs(closed.lb - lp.lb), std::abs(closed.ub - lp.ub));
                    worst = std::max(worst, delta);
                    out << t << ',' << s << ',' << a << ',' << next << ',' << closed.lb << ','
                        << lp.lb << ',' << closed.ub << ',' << lp.ub << ',' << delta << '\n';
                }
            }
        }
    }
    std::cerr << "max |closed form - LP| = " << worst << '\n';
    if (worst > o.tolerance) {
        std::cerr << "closed-form bounds disagree with the LP beyond " << o.tolerance << '\n';
        return kExitInvariant;
    }
    return 0;
}

int cmd_solve(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const Mdp m = resolve_mdp(o, cfg);
    const auto path = resolve_path(o, m, cfg);
    const auto icf = build_interval_cfmdp(m, path, cfg.assumptions);
    const auto solution = robust_value_iteration(icf, parse_value_mode(o.mode));
    std::cerr << o.mode << " V(s_0) = " << solution.values.at(0, path.states.front()) << '\n';
    emit_json(o, "solution.json", solution_to_json(solution));
    return 0;
}

int cmd_gumbel(const Options& o) {
    const RunConfig cfg = resolve_config(o);
    const Mdp m = resolve_mdp(o, cfg);
    const auto path = resolve_path(o, m, cfg);
    const auto cf = build_gumbel_cfmdp(m, path, cfg.gumbel_samples, cfg.seed);
    const auto policy = gumbel_policy(m, cf);
    std::cerr << "gumbel V(s_0) = " << policy.values.at(0, path.states.front()) << '\n';
    if (o.out.empty()) {
        std::cout << Json{{"cfmdp", gumbel_to_json(m, cf)},
                          {"solution", solution_to_json(policy, "point")}}
                         .dump(2)
                  << '\n';
    } else {
        write_json_file(fs::path(o.out) / "gumbel_cfmdp.json", gumbel_to_json(m, cf));
        write_json_file(fs::path(o.out) / "gumbel_solution.json", solution_to_json(policy, "point"));
    }
    return 0;
}

int cmd_experiment(const Options& o, const std::string& name) {
    const RunConfig cfg = resolve_config(o);
    ExperimentReport report;
    if (name == "ope") {
        report = run_ope(cfg);
    } else if (name == "robustness") {
        report = run_robustness(cfg);
    } else if (name == "boundstats") {
        report = run_bound_stats(cfg);
    } else if (name == "timing") {
        report = run_timing(cfg);
    } else {
        report = run_cf_traces(cfg);
    }
    const std::string run_id = make_run_id(cfg.seed);
    const fs::path dir(cfg.output_dir);
    write_report_csv(dir / (name + ".csv"), report, run_id);
    const Json summary = report_summary_json(report, cfg, run_id);
    write_json_file(dir / (name + "_summary_" + run_id + ".json"), summary);
    if (name == "boundstats") {
        const Mdp m = build_environment(cfg);
        std::ofstream triples(dir / "boundstats_triples.csv");
        triples << "run_id,trial,t,s,a,s_next,width_none,width_cs,width_cs_mon\n"
                << std::setprecision(12);
        for (std::size_t i = 0; i < cfg.num_paths; ++i) {
            for (const auto& w : bound_width_triples(m, cfg, i)) {
                triples << run_id << ',' << w.trial << ',' << w.t << ',' << w.s << ',' << w.a
                        << ',' << w.next << ',' << w.none << ',' << w.cs << ',' << w.cs_mon << '\n';
            }
        }
    }
    std::cout << summary["summary"].dump(2) << '\n';
    if (name == "boundstats" && report.summary_value("nesting_violations") > 0) return kExitInvariant;
    if (name == "traces" && report.summary_value("sample_violations") > 0) return kExitInvariant;
    return 0;
}

void add_run_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--env", o.env, "toy, gridworld or frozen_lake");
    cmd->add_option("--p", o.p, "GridWorld probability of the intended move");
    cmd->add_option("--paths", o.paths, "number of observed paths");
    cmd->add_option("--horizon", o.horizon, "path length");
    cmd->add_option("--gumbel-samples", o.gumbel_samples, "posterior samples per Gumbel row");
    cmd->add_option("--cf-samples", o.cf_samples, "sampled CFMDPs per path");
    cmd->add_option("--rollouts", o.rollouts, "rollouts per sampled CFMDP");
    cmd->add_option("--threads", o.threads, "worker threads");
}

void add_path_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--mdp", o.mdp_file, "MDP JSON file (default: the configured env)");
    cmd->add_option("--path", o.path_file, "path JSON file (default: a random-policy path)");
    cmd->add_option("--trial", o.trial, "trial index of the sampled path");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual interval MDPs: bounds, verification and experiments"};
    app.fallthrough();
    app.require_subcommand(1);
    Options o;
    app.add_option("--seed", o.seed, "run seed");
    app.add_option("--config", o.config, "run configuration JSON");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--assumptions", o.assumptions, "none, cs or cs+mon");

    std::string command;
    auto sub = [&](const char* name, const char* help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->callback([&command, name] { command = name; });
        add_run_flags(cmd, o);
        return cmd;
    };
    sub("env", "emit an environment as MDP JSON");
    add_path_flags(sub("bounds", "interval CFMDP for one path"), o);
    auto* verify = sub("verify", "closed-form bounds against the coupling LP, as CSV");
    add_path_flags(verify, o);
    verify->add_option("--tolerance", o.tolerance, "allowed disagreement");
    auto* solve = sub("solve", "robust value iteration on the interval CFMDP");
    add_path_flags(solve, o);
    solve->add_option("--mode", o.mode, "pessimistic or optimistic");
    add_path_flags(sub("gumbel", "Gumbel-max counterfactual MDP and its policy"), o);
    sub("ope", "off-policy evaluation bounds");
    sub("robustness", "worst-case value of robust vs Gumbel-max policies");
    sub("boundstats", "mean interval widths per assumption set");
    sub("timing", "interval vs Gumbel-max CFMDP generation time");
    sub("traces", "reward traces over sampled CFMDPs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (command == "env") return cmd_env(o);
        if (command == "bounds") return cmd_bounds(o);
        if (command == "verify") return cmd_verify(o);
        if (command == "solve") return cmd_solve(o);
        if (command == "gumbel") return cmd_gumbel(o);
        return cmd_experiment(o, command);
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ScaleExceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
