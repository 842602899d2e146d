#include "cfmdp/interval_vi.hpp"

#include "cfmdp/errors.hpp"
#include "cfmdp/random.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>

namespace cfmdp {

std::string_view to_string(ValueMode mode) {
    return mode == ValueMode::Pessimistic ? "pessimistic" : "optimistic";
}

ValueMode parse_value_mode(std::string_view text) {
    if (text == "pessimistic") return ValueMode::Pessimistic;
    if (text == "optimistic") return ValueMode::Optimistic;
    throw InvalidInput("unknown value mode '" + std::string(text) + "'");
}

namespace {

constexpr double kRowSlack = 1e-9;

void check_row(std::span<const ProbInterval> row) {
    double sum_lb = 0.0;
    double sum_ub = 0.0;
    for (const auto& iv : row) {
        sum_lb += iv.lb;
        sum_ub += iv.ub;
    }
    if (sum_lb > 1.0 + kRowSlack || sum_ub < 1.0 - kRowSlack) {
        std::ostringstream msg;
        msg << "interval row is infeasible: sum lb = " << sum_lb << ", sum ub = " << sum_ub;
        throw InfeasibleRow(msg.str());
    }
}

[[noreturn]] void rethrow_located(const InfeasibleRow& e, std::size_t t, State s, Action a) {
    std::ostringstream msg;
    msg << "at (t=" << t << ", s=" << s << ", a=" << a << "): " << e.what();
    throw InfeasibleRow(msg.str());
}

template <class ChooseActions>
void backward_induction(const IntervalCfMdp& icf, ValueMode mode, ValueTable& v,
                        ChooseActions&& actions_at) {
    const Mdp& m = *icf.base;
    for (std::size_t t = icf.horizon; t-- > 0;) {
        const auto next_values = v.layer(t + 1);
        const auto order = fill_order(next_values, mode);
        for (State s = 0; s < icf.num_states; ++s) {
            actions_at(t, s, [&](Action a) {
                try {
                    return m.r(s, a) +
                           robust_expectation_ordered(next_values, icf.row(t, s, a), order);
                } catch (const InfeasibleRow& e) {
                    rethrow_located(e, t, s, a);
                }
            });
        }
    }
}

void require_base(const IntervalCfMdp& icf) {
    if (!icf.base) throw PreconditionViolation("interval CFMDP has no base model");
}

} // namespace

std::vector<State> fill_order(std::span<const double> values, ValueMode mode) {
    std::vector<State> order(values.size());
    std::iota(order.begin(), order.end(), State{0});
    if (mode == ValueMode::Pessimistic) {
        std::stable_sort(order.begin(), order.end(),
                         [&](State a, State b) { return values[a] < values[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](State a, State b) { return values[a] > values[b]; });
    }
    return order;
}

double robust_expectation_ordered(std::span<const double> values,
                                  std::span<const ProbInterval> intervals,
                                  std::span<const State> order) {
    if (values.size() != intervals.size() || order.size() != values.size()) {
        throw PreconditionViolation("robust_expectation: length mismatch");
    }
    check_row(intervals);
    double total = 0.0;
    double remaining = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += intervals[i].lb * values[i];
        remaining -= intervals[i].lb;
    }
    for (State i : order) {
        if (remaining <= 0.0) break;
        const double add = std::min(intervals[i].ub - intervals[i].lb, remaining);
        total += add * values[i];
        remaining -= add;
    }
    return total;
}

double robust_expectation(std::span<const double> values, std::span<const ProbInterval> intervals,
                          ValueMode mode) {
    const auto order = fill_order(values, mode);
    return robust_expectation_ordered(values, intervals, order);
}

RobustSolution robust_value_iteration(const IntervalCfMdp& icf, ValueMode mode) {
    require_base(icf);
    RobustSolution out{PolicySchedule(icf.horizon, icf.num_states),
                       ValueTable(icf.horizon, icf.num_states), mode};
    backward_induction(icf, mode, out.values, [&](std::size_t t, State s, auto&& q_value) {
        double best = 0.0;
        Action best_action = 0;
        for (Action a = 0; a < icf.num_actions; ++a) {
            const double q = q_value(a);
            if (a == 0 || q > best) {
                best = q;
                best_action = a;
            }
        }
        out.values.at(t, s) = best;
        out.policy.at(t, s) = best_action;
    });
    return out;
}

ValueTable robust_policy_eval(const IntervalCfMdp& icf, const PolicySchedule& policy,
                              ValueMode mode) {
    require_base(icf);
    if (policy.horizon < icf.horizon || policy.num_states != icf.num_states) {
        throw PreconditionViolation("robust_policy_eval: policy does not cover the ICFMDP");
    }
    ValueTable v(icf.horizon, icf.num_states);
    backward_induction(icf, mode, v, [&](std::size_t t, State s, auto&& q_value) {
        v.at(t, s) = q_value(policy.at(t, s));
    });
    return v;
}

std::vector<double> sample_interval_row(std::span<const ProbInterval> row, Rng& rng) {
    check_row(row);
    const std::size_t n = row.size();
    std::vector<State> order(n);
    std::iota(order.begin(), order.end(), State{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

    // suffix sums over the visiting order
    std::vector<double> later_lb(n + 1, 0.0);
    std::vector<double> later_ub(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        later_lb[i] = later_lb[i + 1] + row[order[i]].lb;
        later_ub[i] = later_ub[i + 1] + row[order[i]].ub;
    }
    std::vector<double> p(n, 0.0);
    double remaining = 1.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto& iv = row[order[i]];
        double lo = std::max(iv.lb, remaining - later_ub[i + 1]);
        double hi = std::min(iv.ub, remaining - later_lb[i + 1]);
        lo = std::clamp(lo, iv.lb, iv.ub);
        hi = std::clamp(hi, lo, iv.ub);
        const double x = uniform(rng, lo, hi);
        p[order[i]] = x;
        remaining -= x;
    }
    if (n > 0) {
        const auto& last = row[order[n - 1]];
        p[order[n - 1]] = std::clamp(remaining, last.lb, last.ub);
    }
    return p;
}

SampledCfMdp sample_cfmdp(const IntervalCfMdp& icf, std::uint64_t seed) {
    SampledCfMdp out{TransitionSchedule(icf.horizon, icf.num_states, icf.num_actions), seed};
    for (std::size_t t = 0; t < icf.horizon; ++t) {
        for (State s = 0; s < icf.num_states; ++s) {
            for (Action a = 0; a < icf.num_actions; ++a) {
                Rng rng = make_rng(derive_seed(seed, {t, s, a}));
                std::vector<double> p;
                try {
                    p = sample_interval_row(icf.row(t, s, a), rng);
                } catch (const InfeasibleRow& e) {
                    rethrow_located(e, t, s, a);
                }
                std::copy(p.begin(), p.end(), out.transition.row(t, s, a).begin());
            }
        }
    }
    return out;
}

TransitionSchedule nominal_schedule(const Mdp& m, std::size_t horizon) {
    TransitionSchedule out(horizon, m.num_states, m.num_actions);
    for (std::size_t t = 0; t < horizon; ++t) {
        std::copy(m.transition.begin(), m.transition.end(),
                  out.probs.begin() + out.row_offset(t, 0, 0));
    }
    return out;
}

namespace {

void require_compatible(const Mdp& m, const TransitionSchedule& schedule) {
    if (schedule.num_states != m.num_states || schedule.num_actions != m.num_actions) {
        throw PreconditionViolation("transition schedule does not match the model dimensions");
    }
}

double expected_next(const TransitionSchedule& schedule, const ValueTable& v, std::size_t t,
                     State s, Action a) {
    const auto row = schedule.row(t, s, a);
    double total = 0.0;
    for (State next = 0; next < schedule.num_states; ++next) total += row[next] * v.at(t + 1, next);
    return total;
}

} // namespace

FiniteHorizonSolution solve_schedule(const Mdp& m, const TransitionSchedule& schedule) {
    require_compatible(m, schedule);
    const std::size_t H = schedule.horizon;
    FiniteHorizonSolution out{PolicySchedule(H, m.num_states), ValueTable(H, m.num_states)};
    for (std::size_t t = H; t-- > 0;) {
        for (State s = 0; s < m.num_states; ++s) {
            double best = 0.0;
            Action best_action = 0;
            for (Action a = 0; a < m.num_actions; ++a) {
                const double q = m.r(s, a) + expected_next(schedule, out.values, t, s, a);
                if (a == 0 || q > best) {
                    best = q;
                    best_action = a;
                }
            }
            out.values.at(t, s) = best;
            out.policy.at(t, s) = best_action;
        }
    }
    return out;
}

ValueTable evaluate_schedule(const Mdp& m, const TransitionSchedule& schedule,
                             const PolicySchedule& policy) {
    require_compatible(m, schedule);
    if (policy.horizon < schedule.horizon || policy.num_states != m.num_states) {
        throw PreconditionViolation("evaluate_schedule: policy does not cover the schedule");
    }
    ValueTable v(schedule.horizon, m.num_states);
    for (std::size_t t = schedule.horizon; t-- > 0;) {
        for (State s = 0; s < m.num_states; ++s) {
            const Action a = policy.at(t, s);
            v.at(t, s) = m.r(s, a) + expected_next(schedule, v, t, s, a);
        }
    }
    return v;
}

Rollout rollout_schedule(const Mdp& m, const TransitionSchedule& schedule,
                         const PolicySchedule& policy, State start, Rng& rng) {
    Rollout out;
    out.states.reserve(schedule.horizon + 1);
    out.rewards.reserve(schedule.horizon);
    State s = start;
    out.states.push_back(s);
    for (std::size_t t = 0; t < schedule.horizon; ++t) {
        const Action a = policy.at(t, s);
        const double r = m.r(s, a);
        out.rewards.push_back(r);
        out.total += r;
        s = sample_categorical(rng, schedule.row(t, s, a));
        out.states.push_back(s);
    }
    return out;
}

} // namespace cfmdp
