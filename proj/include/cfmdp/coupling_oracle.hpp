#pragma once

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/lp.hpp"
#include "cfmdp/mdp.hpp"

#include <cstdint>
#include <vector>

namespace cfmdp {

/// Joint distribution q[i][j] over (observed-pair outcome i, query-pair outcome j).
struct Coupling {
    std::size_t n = 0;
    std::vector<double> q;

    Coupling() = default;
    explicit Coupling(std::size_t n) : n(n), q(n * n, 0.0) {}

    double at(State i, State j) const { return q[i * n + j]; }
    double& at(State i, State j) { return q[i * n + j]; }
};

/**
 * Distribution over canonical mechanisms. Mechanism u is read as a base-|S|
 * number; its digit s*|A| + a is the successor it assigns to (s, a).
 */
struct CanonicalTheta {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> theta;

    std::size_t mechanism_count() const { return theta.size(); }
    State output(std::size_t u, State s, Action a) const;
};

/// Largest mechanism count enumerate_theta_bounds accepts.
inline constexpr std::uint64_t kMaxMechanisms = 100000;

/// |S|^(|S||A|), saturated at kMaxMechanisms + 1.
std::uint64_t mechanism_count(std::size_t num_states, std::size_t num_actions);

struct OracleResult {
    ProbInterval interval;
    Coupling min_coupling; // attains interval.lb
    Coupling max_coupling; // attains interval.ub
};

/// The coupling LP for one query triple. The objective is q[s_{t+1}, next] (not yet
/// divided by P_obs); `sense` picks min or max.
LpProblem coupling_lp(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                      AssumptionSet assumptions, Sense sense);

/// Bounds on P~(next | query) by solving the coupling LP in both directions.
/// Throws PreconditionViolation if the LP is infeasible (it never should be).
OracleResult oracle_solve(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                          AssumptionSet assumptions);

ProbInterval oracle_bounds(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                           AssumptionSet assumptions);

/// Marginals, non-negativity and the assumption constraints, all within tol.
bool check_coupling_feasible(const Coupling& c, const Mdp& m, ObservedTransition obs,
                             StateAction query, AssumptionSet assumptions, double tol = 1e-9);

enum class ThetaPricing {
    Structured, ///< exploits that reduced costs separate over mechanism digits
    Exhaustive  ///< scans every mechanism; slow, used to cross-check Structured
};

struct ThetaResult {
    ProbInterval interval;
    CanonicalTheta min_theta;
    CanonicalTheta max_theta;
};

/// Same bounds as oracle_bounds but over the full mechanism distribution, with
/// every interventional constraint of the model. Throws ScaleExceeded above
/// kMaxMechanisms.
ThetaResult enumerate_theta_solve(const Mdp& m, ObservedTransition obs, StateAction query,
                                  State next, AssumptionSet assumptions,
                                  ThetaPricing pricing = ThetaPricing::Structured);

ProbInterval enumerate_theta_bounds(const Mdp& m, ObservedTransition obs, StateAction query,
                                    State next, AssumptionSet assumptions,
                                    ThetaPricing pricing = ThetaPricing::Structured);

/// True iff theta is a distribution reproducing every P(.|s,a) within tol.
bool check_theta_feasible(const CanonicalTheta& theta, const Mdp& m, double tol = 1e-9);

} // namespace cfmdp
