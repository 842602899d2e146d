// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/coupling_oracle.hpp"
#include "cfmdp/environments.hpp"
#include "cfmdp/experiments.hpp"
#include "cfmdp/gumbel_scm.hpp"
#include "cfmdp/interval_vi.hpp"

#include "../support/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace cfmdp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& check) {
    try {
        const auto [ok, detail] = check();
        report(name, ok, detail);
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

template <class... Args> std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct RandomInstance {
    Mdp m;
    ObservedTransition obs;
};

// The 200 random models shared by the equivalence and nesting checks.
std::vector<RandomInstance> random_instances() {
    std::vector<RandomInstance> out;
    for (std::uint64_t i = 0; i < 200; ++i) {
        const std::size_t S = 2 + i % 3;
        const std::size_t A = 1 + (i / 3) % 2;
        Mdp m = testing::random_mdp(S, A, 10000 + i);
        Rng rng = make_rng(20000 + i);
        const auto obs = testing::random_observation(m, rng);
        out.push_back({std::move(m), obs});
    }
    return out;
}

std::pair<bool, std::string> table_exactness() {
    const Mdp toy = build_toy_mdp();
    const ObservedPath path{{0, 1}, {0}};
    const double none[9][2] = {{0, 0}, {1, 1}, {0, 0}, {0, 1}, {0, 0}, {0, 1}, {0, 0}, {0, 0}, {1, 1}};
    const double mon[9][2] = {{0, 0}, {1, 1}, {0, 0}, {0.4, 0.4}, {0, 0}, {0.6, 0.6}, {0, 0}, {0, 0}, {1, 1}};
    const auto start = Clock::now();
    const auto a = build_interval_cfmdp(toy, path, AssumptionSet::NoAssumptions);
    const auto b = build_interval_cfmdp(toy, path, AssumptionSet::CsAndMonotonicity);
    const double elapsed = seconds_since(start);
    double err = 0.0;
    for (State s = 0; s < 3; ++s) {
        for (State j = 0; j < 3; ++j) {
            const std::size_t k = s * 3 + j;
            err = std::max({err, std::abs(a.at(0, s, 0, j).lb - none[k][0]),
                            std::abs(a.at(0, s, 0, j).ub - none[k][1]),
                            std::abs(b.at(0, s, 0, j).lb - mon[k][0]),
                            std::abs(b.at(0, s, 0, j).ub - mon[k][1])});
        }
    }
    return {err <= 1e-12 && elapsed < 1e-3, fmt("max error %.2e, %.3f ms", err, elapsed * 1e3)};
}

std::pair<bool, std::string> oracle_equivalence(const std::vector<RandomInstance>& instances) {
    const auto start = Clock::now();
    double lp_err = 0.0, theta_err = 0.0;
    std::size_t compared = 0, theta_compared = 0;
    for (const auto& [m, obs] : instances) {
        const bool theta_ok = mechanism_count(m.num_states, m.num_actions) <= kMaxMechanisms;
        for (auto as : kAllAssumptionSets) {
            for (State s = 0; s < m.num_states; ++s) {
                for (Action a = 0; a < m.num_actions; ++a) {
                    const auto row = counterfactual_row(m, obs, {s, a}, as);
                    for (State j = 0; j < m.num_states; ++j) {
                        const auto lp = oracle_bounds(m, obs, {s, a}, j, as);
                        lp_err = std::max({lp_err, std::abs(lp.lb - row[j].lb), std::abs(lp.ub - row[j].ub)});
                        ++compared;
                        if (theta_ok) {
                            const auto th = enumerate_theta_bounds(m, obs, {s, a}, j, as);
                            theta_err = std::max({theta_err, std::abs(th.lb - row[j].lb),
                                                  std::abs(th.ub - row[j].ub)});
                            ++theta_compared;
                        }
                    }
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    const bool ok = lp_err <= 1e-8 && theta_err <= 1e-8 && elapsed < 120.0;
    return {ok, fmt("%zu bounds vs coupling LP (max err %.2e), %zu vs mechanism LP (max err %.2e), %.1f s",
                    compared, lp_err, theta_compared, theta_err, elapsed)};
}

std::pair<bool, std::string> disjoint_closed_form() {
    Rng rng = make_rng(77);
    double err = 0.0;
    std::size_t instances = 0;
    while (instances < 100) {
        const std::size_t S = 3 + uniform_index(rng, 4);
        const std::size_t split = 1 + uniform_index(rng, S - 1);
        Mdp m(S, 2);
        // Observed row on [0, split), query row on [split, S).
        const auto lo = testing::random_row(rng, split);
        const auto hi = testing::random_row(rng, S - split);
        for (State j = 0; j < split; ++j) m.p(0, 0, j) = lo[j];
        for (State j = split; j < S; ++j) m.p(0, 1, j) = hi[j - split];
        for (State s = 1; s < S; ++s) m.p(s, 0, s) = m.p(s, 1, s) = 1.0;
        State k = 0;
        while (m.p(0, 0, k) == 0.0) ++k;
        const ObservedTransition obs{0, 0, k};
        if (classify_support(m, {0, 0}, {0, 1}) != SupportRelation::Disjoint) continue;
        ++instances;
        const double p_obs = m.p(0, 0, k);
        const auto row = counterfactual_row(m, obs, {0, 1}, AssumptionSet::CsAndMonotonicity);
        for (State j = 0; j < S; ++j) {
            const double p = m.p(0, 1, j);
            const double ub = std::min(1.0, p / p_obs);
            const double lb = std::max(0.0, (p - (1.0 - p_obs)) / p_obs);
            err = std::max({err, std::abs(row[j].lb - lb), std::abs(row[j].ub - ub)});
        }
    }
    return {err <= 1e-12, fmt("%zu disjoint instances, max error %.2e", instances, err)};
}

std::pair<bool, std::string> nesting(const std::vector<RandomInstance>& instances) {
    std::size_t checked = 0, violations = 0;
    for (const auto& [m, obs] : instances) {
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                const auto none = counterfactual_row(m, obs, {s, a}, AssumptionSet::NoAssumptions);
                const auto cs = counterfactual_row(m, obs, {s, a}, AssumptionSet::CsOnly);
                const auto mon = counterfactual_row(m, obs, {s, a}, AssumptionSet::CsAndMonotonicity);
                for (State j = 0; j < m.num_states; ++j) {
                    ++checked;
                    if (mon[j].width() > cs[j].width() + 1e-12 || cs[j].width() > none[j].width() + 1e-12) {
                        ++violations;
                    }
                }
            }
        }
    }
    return {violations == 0, fmt("%zu transitions, %zu violations", checked, violations)};
}

std::pair<bool, std::string> gumbel_baseline() {
    const auto start = Clock::now();
    const Mdp toy = build_toy_mdp();
    const auto p = gumbel_cf_probs(toy, {0, 0, 1}, {1, 0}, 100000, 2024);
    const bool toy_ok = std::abs(p[0] - 0.35) <= 0.02 && p[1] == 0.0 && std::abs(p[2] - 0.65) <= 0.02;

    const std::size_t N = 10000;
    std::size_t checked = 0, outside = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const Mdp m = testing::random_mdp(2 + i % 3, 1 + (i / 3) % 2, 30000 + i);
        Rng rng = make_rng(40000 + i);
        const auto obs = testing::random_observation(m, rng);
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                const auto est = gumbel_cf_probs(m, obs, {s, a}, N, derive_seed(i, {s, a}));
                const auto row = counterfactual_row(m, obs, {s, a}, AssumptionSet::CsOnly);
                for (State j = 0; j < m.num_states; ++j) {
                    // Standard error taken at the nearest admissible value, so an empty
                    // count on a tiny-probability entry still gets a nonzero slack.
                    const double q = std::clamp(est[j], row[j].lb, row[j].ub);
                    const double slack = 3.0 * std::sqrt(q * (1.0 - q) / N) + 1e-12;
                    ++checked;
                    if (!row[j].contains(est[j], slack)) ++outside;
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {toy_ok && outside == 0 && elapsed < 30.0,
            fmt("toy (%.4f, %.4f, %.4f); %zu/%zu estimates outside; %.1f s", p[0], p[1], p[2], outside,
                checked, elapsed)};
}

std::pair<bool, std::string> robust_vi() {
    double degenerate_err = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Mdp m(5, 3);
        Rng rng = make_rng(seed);
        for (State s = 0; s < 5; ++s) {
            for (Action a = 0; a < 3; ++a) {
                m.p(s, a, uniform_index(rng, 5)) = 1.0;
                m.r(s, a) = uniform(rng, -1, 1);
            }
        }
        const auto path = sample_path(m, random_policy(5, 3, 8, seed), 8, seed);
        const auto classic = solve_finite_horizon(m, 8);
        for (auto as : kAllAssumptionSets) {
            const auto icf = build_interval_cfmdp(m, path, as);
            for (auto mode : {ValueMode::Pessimistic, ValueMode::Optimistic}) {
                const auto sol = robust_value_iteration(icf, mode);
                for (std::size_t i = 0; i < sol.values.values.size(); ++i) {
                    degenerate_err = std::max(degenerate_err, std::abs(sol.values.values[i] - classic.values.values[i]));
                }
            }
        }
    }

    std::size_t sandwich_fail = 0, sampled = 0;
    for (std::uint64_t k = 0; k < 3; ++k) {
        const auto icf = testing::random_icfmdp(4, 2, 6, kAllAssumptionSets[k], 500 + k);
        const State s0 = icf.initial_state();
        const auto policy = robust_value_iteration(icf, ValueMode::Pessimistic).policy;
        const double lo = robust_policy_eval(icf, policy, ValueMode::Pessimistic).at(0, s0);
        const double hi = robust_policy_eval(icf, policy, ValueMode::Optimistic).at(0, s0);
        for (std::uint64_t c = 0; c < 20; ++c) {
            const auto cf = sample_cfmdp(icf, derive_seed(k, {c}));
            Rng rng = make_rng(derive_seed(k, {c, 1}));
            const int n = 10000;
            double sum = 0.0, sum_sq = 0.0;
            for (int i = 0; i < n; ++i) {
                const double g = rollout_schedule(*icf.base, cf.transition, policy, s0, rng).total;
                sum += g;
                sum_sq += g * g;
            }
            const double mean = sum / n;
            const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
            ++sampled;
            if (mean < lo - 3 * se || mean > hi + 3 * se) ++sandwich_fail;
        }
    }
    return {degenerate_err <= 1e-10 && sandwich_fail == 0,
            fmt("degenerate max error %.2e; %zu/%zu sampled CFMDPs outside [pess, opt] +- 3 SE",
                degenerate_err, sandwich_fail, sampled)};
}

RunConfig grid_config(double p, std::size_t paths) {
    RunConfig cfg;
    cfg.env = "gridworld";
    cfg.grid.p_intended = p;
    cfg.num_paths = paths;
    cfg.horizon = 10;
    cfg.gumbel_samples = 1000;
    cfg.seed = 1;
    return cfg;
}

std::pair<bool, std::string> ope_bracketing() {
    const auto start = Clock::now();
    const auto r = run_ope(grid_config(0.4, 100));
    const double elapsed = seconds_since(start);
    const double pess = r.summary_value("mean_pessimistic");
    const double opt = r.summary_value("mean_optimistic");
    const double truth = r.summary_value("true_value");
    const double gumbel = r.summary_value("mean_gumbel");
    const double se = r.summary_value("se_gumbel");
    const bool ok = pess <= truth && truth <= opt && gumbel >= pess - 3 * se && gumbel <= opt + 3 * se &&
                    elapsed < 300.0;
    return {ok, fmt("pessimistic %.3f <= true %.3f <= optimistic %.3f; gumbel %.3f (se %.3f); %.1f s",
                    pess, truth, opt, gumbel, se, elapsed)};
}

std::pair<bool, std::string> robustness() {
    const auto r = run_robustness(grid_config(0.4, 30));
    const double dom = r.summary_value("dominance_fraction");
    const double gap = r.summary_value("mean_gap");
    return {dom == 1.0 && gap > 0.0 && r.records.size() >= 30,
            fmt("%zu trials, dominance %.3f, mean gap %.3f (robust %.2f vs gumbel %.2f)", r.records.size(),
                dom, gap, r.summary_value("mean_icfmdp"), r.summary_value("mean_gumbel"))};
}

std::pair<bool, std::string> widths() {
    const double w9 = run_bound_stats(grid_config(0.9, 20)).summary_value("mean_width_cs_mon");
    const double w4 = run_bound_stats(grid_config(0.4, 20)).summary_value("mean_width_cs_mon");
    const bool ok = w9 >= 0.05 && w9 <= 0.11 && w4 >= 0.47 && w4 <= 0.63;
    return {ok, fmt("p=0.9 width %.4f in [0.05, 0.11]; p=0.4 width %.4f in [0.47, 0.63]", w9, w4)};
}

std::pair<bool, std::string> timing() {
    RunConfig cfg = grid_config(0.4, 3);
    cfg.gumbel_samples = 10000;
    const auto r = run_timing(cfg);
    const double speedup = r.summary_value("speedup");
    return {speedup >= 10.0, fmt("interval %.4f s, gumbel %.4f s per path, speedup %.0fx",
                                 r.summary_value("mean_icfmdp_seconds"),
                                 r.summary_value("mean_gumbel_seconds"), speedup)};
}

std::pair<bool, std::string> sampling_validity() {
    std::size_t entries = 0, violations = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const auto icf = testing::random_icfmdp(2 + i % 4, 1 + i % 2, 3, kAllAssumptionSets[i % 3], 60000 + i);
        const auto cf = sample_cfmdp(icf, i);
        const std::size_t S = icf.base->num_states;
        for (std::size_t e = 0; e < icf.intervals.size(); ++e) {
            ++entries;
            if (!icf.intervals[e].contains(cf.transition.probs[e], 1e-12)) ++violations;
        }
        for (std::size_t off = 0; off < cf.transition.probs.size(); off += S) {
            double total = 0.0;
            for (std::size_t j = 0; j < S; ++j) total += cf.transition.probs[off + j];
            if (std::abs(total - 1.0) > 1e-9) ++violations;
        }
    }
    return {violations == 0, fmt("1000 sampled CFMDPs, %zu entries, %zu violations", entries, violations)};
}

} // namespace

int main() {
    const auto instances = random_instances();
    run("table_exactness", table_exactness);
    run("oracle_equivalence", [&] { return oracle_equivalence(instances); });
    run("disjoint_closed_form", disjoint_closed_form);
    run("nesting", [&] { return nesting(instances); });
    run("gumbel_baseline", gumbel_baseline);
    run("robust_vi", robust_vi);
    run("ope_bracketing", ope_bracketing);
    run("robustness_dominance", robustness);
    run("bound_widths", widths);
    run("timing", timing);
    run("sampling_validity", sampling_validity);
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
