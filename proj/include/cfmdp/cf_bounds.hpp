#pragma once

#include "cfmdp/mdp.hpp"

#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace cfmdp {

/// Which structural assumptions constrain the counterfactual model.
enum class AssumptionSet {
    NoAssumptions,
    CsOnly,           ///< counterfactual stability
    CsAndMonotonicity ///< counterfactual stability + both monotonicity conditions
};

inline constexpr AssumptionSet kAllAssumptionSets[] = {
    AssumptionSet::NoAssumptions, AssumptionSet::CsOnly, AssumptionSet::CsAndMonotonicity};

/// "none", "cs" or "cs+mon".
std::string_view to_string(AssumptionSet assumptions);
/// Inverse of to_string; throws InvalidInput on anything else.
AssumptionSet parse_assumptions(std::string_view text);

struct ProbInterval {
    double lb = 0.0;
    double ub = 0.0;

    double width() const { return ub - lb; }
    bool contains(double p, double tol = 0.0) const { return p >= lb - tol && p <= ub + tol; }
    friend bool operator==(const ProbInterval&, const ProbInterval&) = default;
};

enum class SupportRelation { ObservedPair, Disjoint, Overlapping };

/// ObservedPair iff query == observed; Disjoint iff the two rows share no
/// positive-probability successor; Overlapping otherwise.
SupportRelation classify_support(const Mdp& m, StateAction observed, StateAction query);

/**
 * Counterfactual-stability condition for query -> next given the observation:
 * P(next | obs) > 0 and P(s_{t+1} | query) * P(next | obs) > P(next | query) * P(s_{t+1} | obs).
 * Strict, evaluated by cross-multiplication.
 */
bool cs_condition(const Mdp& m, ObservedTransition obs, StateAction query, State next);

/// [1,1] at s_{t+1}, [0,0] elsewhere. Used for the observed pair under every assumption set.
std::vector<ProbInterval> bounds_observed_pair(const Mdp& m, ObservedTransition obs);

/// Bounds for a query pair whose support is disjoint from the observed pair's.
ProbInterval bounds_disjoint(const Mdp& m, ObservedTransition obs, StateAction query, State next);

/// Upper bound for an overlapping-support query pair under CS + monotonicity.
double bounds_overlapping_ub(const Mdp& m, ObservedTransition obs, StateAction query, State next);

/// Lower bound for an overlapping-support query pair under CS + monotonicity.
/// `ub_row` holds bounds_overlapping_ub for every successor of the same query pair.
double bounds_overlapping_lb(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                             std::span<const double> ub_row);

/// Bounds with neither assumption. Requires query != observed pair.
ProbInterval bounds_no_assumption(const Mdp& m, ObservedTransition obs, StateAction query,
                                  State next);

/// Upper bound with counterfactual stability only.
double cs_only_ub(const Mdp& m, ObservedTransition obs, StateAction query, State next);

/// Bounds with counterfactual stability only. `ub_row` holds cs_only_ub for every
/// successor of the same query pair. Requires query != observed pair.
ProbInterval bounds_cs_only(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                            std::span<const double> ub_row);

/// Full interval row for one query pair: dispatches on support relation and
/// assumptions, two passes (upper bounds, then lower bounds).
std::vector<ProbInterval> counterfactual_row(const Mdp& m, ObservedTransition obs,
                                             StateAction query, AssumptionSet assumptions);

/// Time-indexed interval counterfactual MDP for one observed path.
struct IntervalCfMdp {
    std::size_t horizon = 0;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    AssumptionSet assumptions = AssumptionSet::CsAndMonotonicity;
    std::shared_ptr<const Mdp> base;
    ObservedPath path;
    std::vector<ProbInterval> intervals; // [t][s][a][s']

    std::size_t row_offset(std::size_t t, State s, Action a) const {
        return ((t * num_states + s) * num_actions + a) * num_states;
    }
    const ProbInterval& at(std::size_t t, State s, Action a, State next) const {
        return intervals[row_offset(t, s, a) + next];
    }
    std::span<const ProbInterval> row(std::size_t t, State s, Action a) const {
        return {intervals.data() + row_offset(t, s, a), num_states};
    }
    State initial_state() const { return path.states.front(); }
};

/// Fills every (t, s, a, s') interval of the ICFMDP for `path`.
IntervalCfMdp build_interval_cfmdp(std::shared_ptr<const Mdp> m, const ObservedPath& path,
                                   AssumptionSet assumptions);
IntervalCfMdp build_interval_cfmdp(const Mdp& m, const ObservedPath& path,
                                   AssumptionSet assumptions);

} // namespace cfmdp
