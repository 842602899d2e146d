#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfmdp {

using State = std::size_t;
using Action = std::size_t;

struct StateAction {
    State state = 0;
    Action action = 0;

    friend bool operator==(const StateAction&, const StateAction&) = default;
};

/// One observed step s_t, a_t -> s_{t+1}.
struct ObservedTransition {
    State state = 0;
    Action action = 0;
    State next = 0;

    StateAction pair() const { return {state, action}; }
    friend bool operator==(const ObservedTransition&, const ObservedTransition&) = default;
};

/**
 * Finite tabular MDP with rewards R(s, a).
 *
 * Storage is row-major: transition[(s * num_actions + a) * num_states + s'].
 * The struct does not enforce its invariants; builders and loaders call
 * require_valid() and validate_mdp() reports what is wrong.
 */
struct Mdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> transition;
    std::vector<double> reward;
    std::vector<double> initial_dist;
    std::vector<std::string> state_labels; // empty when the model carries no labels

    Mdp() = default;
    /// Zero transitions and rewards, initial distribution concentrated on state 0.
    Mdp(std::size_t states, std::size_t actions);

    double p(State s, Action a, State next) const {
        return transition[(s * num_actions + a) * num_states + next];
    }
    double& p(State s, Action a, State next) {
        return transition[(s * num_actions + a) * num_states + next];
    }
    std::span<const double> row(State s, Action a) const {
        return {transition.data() + (s * num_actions + a) * num_states, num_states};
    }
    std::span<double> row(State s, Action a) {
        return {transition.data() + (s * num_actions + a) * num_states, num_states};
    }
    double r(State s, Action a) const { return reward[s * num_actions + a]; }
    double& r(State s, Action a) { return reward[s * num_actions + a]; }
};

/// Alternating state/action sequence; states has one more entry than actions.
struct ObservedPath {
    std::vector<State> states;
    std::vector<Action> actions;

    std::size_t length() const { return actions.size(); }
    ObservedTransition step(std::size_t t) const { return {states[t], actions[t], states[t + 1]}; }
};

/// Time-indexed deterministic policy.
struct PolicySchedule {
    std::size_t horizon = 0;
    std::size_t num_states = 0;
    std::vector<Action> actions; // [t][s]

    PolicySchedule() = default;
    PolicySchedule(std::size_t horizon, std::size_t num_states, Action fill = 0)
        : horizon(horizon), num_states(num_states), actions(horizon * num_states, fill) {}

    Action at(std::size_t t, State s) const { return actions[t * num_states + s]; }
    Action& at(std::size_t t, State s) { return actions[t * num_states + s]; }
};

/// values[t][s] for t = 0..horizon; the last layer is the terminal value.
struct ValueTable {
    std::size_t horizon = 0;
    std::size_t num_states = 0;
    std::vector<double> values;

    ValueTable() = default;
    ValueTable(std::size_t horizon, std::size_t num_states)
        : horizon(horizon), num_states(num_states), values((horizon + 1) * num_states, 0.0) {}

    double at(std::size_t t, State s) const { return values[t * num_states + s]; }
    double& at(std::size_t t, State s) { return values[t * num_states + s]; }
    std::span<const double> layer(std::size_t t) const {
        return {values.data() + t * num_states, num_states};
    }
};

struct FiniteHorizonSolution {
    PolicySchedule policy;
    ValueTable values;
};

inline constexpr double kStochasticTolerance = 1e-9;

/// Empty iff every Mdp invariant holds. Each entry names the offending index.
std::vector<std::string> validate_mdp(const Mdp& m);

/// Throws InvalidInput listing every violation.
void require_valid(const Mdp& m);

/// Throws InvalidInput unless the path has consistent lengths, valid indices and
/// only positive-probability transitions.
void require_valid_path(const Mdp& m, const ObservedPath& path);

void require_valid_policy(const Mdp& m, const PolicySchedule& policy);

/// Samples exactly `horizon` transitions, s_0 from initial_dist. Deterministic in seed.
ObservedPath sample_path(const Mdp& m, const PolicySchedule& policy, std::size_t horizon,
                         std::uint64_t seed);

/// Undiscounted cumulative reward sum_t R(s_t, a_t).
double path_return(const Mdp& m, const ObservedPath& path);

/// Backward-induction value of a fixed policy with terminal value 0.
ValueTable exact_policy_value(const Mdp& m, const PolicySchedule& policy, std::size_t horizon);

/// Classic finite-horizon value iteration on the nominal model; ties go to the
/// lowest action index.
FiniteHorizonSolution solve_finite_horizon(const Mdp& m, std::size_t horizon);

/// sum_s initial_dist[s] * values[0][s].
double initial_value(const Mdp& m, const ValueTable& values);

/// Independent uniformly random action for every (t, s); drawing a path under
/// it is the same as acting uniformly at random.
PolicySchedule random_policy(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::uint64_t seed);

/// True for a state that every action maps back to itself with reward 0.
bool is_absorbing_terminal(const Mdp& m, State s);

} // namespace cfmdp
