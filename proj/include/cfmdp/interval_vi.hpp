#pragma once

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/mdp.hpp"
#include "cfmdp/random.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cfmdp {

enum class ValueMode { Pessimistic, Optimistic };

std::string_view to_string(ValueMode mode);
ValueMode parse_value_mode(std::string_view text);

struct RobustSolution {
    PolicySchedule policy;
    ValueTable values;
    ValueMode mode = ValueMode::Pessimistic;
};

/// Time-indexed point transition table P_t(s' | s, a).
struct TransitionSchedule {
    std::size_t horizon = 0;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> probs; // [t][s][a][s']

    TransitionSchedule() = default;
    TransitionSchedule(std::size_t horizon, std::size_t states, std::size_t actions)
        : horizon(horizon), num_states(states), num_actions(actions),
          probs(horizon * states * actions * states, 0.0) {}

    std::size_t row_offset(std::size_t t, State s, Action a) const {
        return ((t * num_states + s) * num_actions + a) * num_states;
    }
    std::span<const double> row(std::size_t t, State s, Action a) const {
        return {probs.data() + row_offset(t, s, a), num_states};
    }
    std::span<double> row(std::size_t t, State s, Action a) {
        return {probs.data() + row_offset(t, s, a), num_states};
    }
    double at(std::size_t t, State s, Action a, State next) const {
        return probs[row_offset(t, s, a) + next];
    }
};

/// One concrete counterfactual MDP drawn from an ICFMDP.
struct SampledCfMdp {
    TransitionSchedule transition;
    std::uint64_t seed = 0;
};

/**
 * min (Pessimistic) or max (Optimistic) of sum_i p_i v_i over lb <= p <= ub,
 * sum p = 1. Throws InfeasibleRow if the box holds no distribution.
 */
double robust_expectation(std::span<const double> values, std::span<const ProbInterval> intervals,
                          ValueMode mode);

/// Successor indices sorted by value (ascending for Pessimistic, descending for
/// Optimistic), ties by index.
std::vector<State> fill_order(std::span<const double> values, ValueMode mode);

/// robust_expectation with a precomputed fill_order.
double robust_expectation_ordered(std::span<const double> values,
                                  std::span<const ProbInterval> intervals,
                                  std::span<const State> order);

/// Backward induction over the ICFMDP using rewards of icf.base. Ties go to the
/// lowest action index.
RobustSolution robust_value_iteration(const IntervalCfMdp& icf, ValueMode mode);

/// Same backup with actions fixed by `policy`.
ValueTable robust_policy_eval(const IntervalCfMdp& icf, const PolicySchedule& policy,
                              ValueMode mode);

/// Draws one distribution from the box of `row` (sequential conditional sampling
/// in a random order).
std::vector<double> sample_interval_row(std::span<const ProbInterval> row, Rng& rng);

/// Every row sampled independently with a seed derived from (seed, t, s, a).
SampledCfMdp sample_cfmdp(const IntervalCfMdp& icf, std::uint64_t seed);

/// Degenerate schedule: nominal rows repeated at every step.
TransitionSchedule nominal_schedule(const Mdp& m, std::size_t horizon);

/// Finite-horizon VI on a point schedule with rewards from m.
FiniteHorizonSolution solve_schedule(const Mdp& m, const TransitionSchedule& schedule);

/// Exact value of a fixed policy on a point schedule.
ValueTable evaluate_schedule(const Mdp& m, const TransitionSchedule& schedule,
                             const PolicySchedule& policy);

struct Rollout {
    std::vector<State> states;
    std::vector<double> rewards; // instant reward per step
    double total = 0.0;
};

/// Simulates one path of the schedule under `policy` from `start`.
Rollout rollout_schedule(const Mdp& m, const TransitionSchedule& schedule,
                         const PolicySchedule& policy, State start, Rng& rng);

} // namespace cfmdp
