#include "cfmdp/mdp.hpp"

#include "cfmdp/errors.hpp"
#include "cfmdp/random.hpp"

#include <cmath>
#include <sstream>

namespace cfmdp {

Mdp::Mdp(std::size_t states, std::size_t actions)
    : num_states(states), num_actions(actions), transition(states * actions * states, 0.0),
      reward(states * actions, 0.0), initial_dist(states, 0.0) {
    if (states > 0) initial_dist[0] = 1.0;
}

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

} // namespace

std::vector<std::string> validate_mdp(const Mdp& m) {
    std::vector<std::string> violations;
    const std::size_t S = m.num_states;
    const std::size_t A = m.num_actions;
    if (S == 0) violations.emplace_back("num_states must be positive");
    if (A == 0) violations.emplace_back("num_actions must be positive");
    if (m.transition.size() != S * A * S) {
        violations.emplace_back("transition table has " + std::to_string(m.transition.size()) +
                                " entries, expected " + std::to_string(S * A * S));
    }
    if (m.reward.size() != S * A) {
        violations.emplace_back("reward table has " + std::to_string(m.reward.size()) +
                                " entries, expected " + std::to_string(S * A));
    }
    if (m.initial_dist.size() != S) {
        violations.emplace_back("initial_dist has " + std::to_string(m.initial_dist.size()) +
                                " entries, expected " + std::to_string(S));
    }
    if (!m.state_labels.empty() && m.state_labels.size() != S) {
        violations.emplace_back("state_labels has " + std::to_string(m.state_labels.size()) +
                                " entries, expected " + std::to_string(S));
    }
    if (!violations.empty()) return violations;

    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            double total = 0.0;
            for (State next = 0; next < S; ++next) {
                const double p = m.p(s, a, next);
                if (!is_probability(p)) {
                    std::ostringstream msg;
                    msg << "transition(" << s << "," << a << "," << next << ") = " << p
                        << " is not a probability";
                    violations.push_back(msg.str());
                }
                total += p;
            }
            if (std::abs(total - 1.0) > kStochasticTolerance) {
                std::ostringstream msg;
                msg << "transition row (" << s << "," << a << ") sums to " << total;
                violations.push_back(msg.str());
            }
        }
    }
    double initial_total = 0.0;
    for (State s = 0; s < S; ++s) {
        if (!is_probability(m.initial_dist[s])) {
            std::ostringstream msg;
            msg << "initial_dist(" << s << ") = " << m.initial_dist[s] << " is not a probability";
            violations.push_back(msg.str());
        }
        initial_total += m.initial_dist[s];
    }
    if (std::abs(initial_total - 1.0) > kStochasticTolerance) {
        std::ostringstream msg;
        msg << "initial_dist sums to " << initial_total;
        violations.push_back(msg.str());
    }
    for (std::size_t i = 0; i < m.reward.size(); ++i) {
        if (!std::isfinite(m.reward[i])) {
            violations.push_back("reward(" + std::to_string(i / A) + "," + std::to_string(i % A) +
                                 ") is not finite");
        }
    }
    return violations;
}

void require_valid(const Mdp& m) {
    const auto violations = validate_mdp(m);
    if (violations.empty()) return;
    std::string msg = "invalid MDP:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw InvalidInput(msg);
}

void require_valid_path(const Mdp& m, const ObservedPath& path) {
    if (path.states.size() != path.actions.size() + 1) {
        throw InvalidInput("path has " + std::to_string(path.states.size()) + " states and " +
                           std::to_string(path.actions.size()) + " actions");
    }
    for (std::size_t t = 0; t < path.states.size(); ++t) {
        if (path.states[t] >= m.num_states) {
            throw InvalidInput("path state at t=" + std::to_string(t) + " out of range");
        }
    }
    for (std::size_t t = 0; t < path.length(); ++t) {
        if (path.actions[t] >= m.num_actions) {
            throw InvalidInput("path action at t=" + std::to_string(t) + " out of range");
        }
        const auto step = path.step(t);
        if (!(m.p(step.state, step.action, step.next) > 0.0)) {
            throw InvalidInput("observed transition at t=" + std::to_string(t) + " (" +
                               std::to_string(step.state) + "," + std::to_string(step.action) +
                               "->" + std::to_string(step.next) + ") has zero probability");
        }
    }
}

void require_valid_policy(const Mdp& m, const PolicySchedule& policy) {
    if (policy.horizon < 1) throw InvalidInput("policy horizon must be at least 1");
    if (policy.num_states != m.num_states ||
        policy.actions.size() != policy.horizon * policy.num_states) {
        throw InvalidInput("policy dimensions do not match the MDP");
    }
    for (Action a : policy.actions) {
        if (a >= m.num_actions) throw InvalidInput("policy action out of range");
    }
}

ObservedPath sample_path(const Mdp& m, const PolicySchedule& policy, std::size_t horizon,
                         std::uint64_t seed) {
    if (horizon > policy.horizon) {
        throw PreconditionViolation("sample_path: horizon exceeds the policy horizon");
    }
    Rng rng = make_rng(seed);
    ObservedPath path;
    path.states.reserve(horizon + 1);
    path.actions.reserve(horizon);
    State s = sample_categorical(rng, m.initial_dist);
    path.states.push_back(s);
    for (std::size_t t = 0; t < horizon; ++t) {
        const Action a = policy.at(t, s);
        const auto row = m.row(s, a);
        bool any_mass = false;
        for (double p : row) any_mass = any_mass || p > 0.0;
        if (!any_mass) {
            throw PreconditionViolation("sample_path: row (" + std::to_string(s) + "," +
                                        std::to_string(a) + ") has no probability mass");
        }
        s = sample_categorical(rng, row);
        path.actions.push_back(a);
        path.states.push_back(s);
    }
    return path;
}

double path_return(const Mdp& m, const ObservedPath& path) {
    double total = 0.0;
    for (std::size_t t = 0; t < path.length(); ++t) total += m.r(path.states[t], path.actions[t]);
    return total;
}

ValueTable exact_policy_value(const Mdp& m, const PolicySchedule& policy, std::size_t horizon) {
    if (horizon > policy.horizon) {
        throw PreconditionViolation("exact_policy_value: horizon exceeds the policy horizon");
    }
    ValueTable v(horizon, m.num_states);
    for (std::size_t t = horizon; t-- > 0;) {
        for (State s = 0; s < m.num_states; ++s) {
            const Action a = policy.at(t, s);
            double expected = 0.0;
            const auto row = m.row(s, a);
            for (State next = 0; next < m.num_states; ++next) {
                expected += row[next] * v.at(t + 1, next);
            }
            v.at(t, s) = m.r(s, a) + expected;
        }
    }
    return v;
}

FiniteHorizonSolution solve_finite_horizon(const Mdp& m, std::size_t horizon) {
    FiniteHorizonSolution out{PolicySchedule(horizon, m.num_states), ValueTable(horizon, m.num_states)};
    for (std::size_t t = horizon; t-- > 0;) {
        for (State s = 0; s < m.num_states; ++s) {
            double best = 0.0;
            Action best_action = 0;
            for (Action a = 0; a < m.num_actions; ++a) {
                double q = m.r(s, a);
                const auto row = m.row(s, a);
                for (State next = 0; next < m.num_states; ++next) {
                    q += row[next] * out.values.at(t + 1, next);
                }
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

double initial_value(const Mdp& m, const ValueTable& values) {
    double total = 0.0;
    for (State s = 0; s < m.num_states; ++s) total += m.initial_dist[s] * values.at(0, s);
    return total;
}

PolicySchedule random_policy(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                             std::uint64_t seed) {
    Rng rng = make_rng(seed);
    PolicySchedule policy(horizon, num_states);
    for (auto& a : policy.actions) a = uniform_index(rng, num_actions);
    return policy;
}

bool is_absorbing_terminal(const Mdp& m, State s) {
    for (Action a = 0; a < m.num_actions; ++a) {
        if (m.p(s, a, s) != 1.0 || m.r(s, a) != 0.0) return false;
    }
    return true;
}

} // namespace cfmdp
