#include "cfmdp/coupling_oracle.hpp"

#include "cfmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cfmdp {

namespace {

/// One linear constraint on q[a, b] (in coupling units, i.e. already times P_obs).
struct JointConstraint {
    State a;
    State b;
    Relation relation;
    double rhs;
};

void check_query(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    if (obs.state >= m.num_states || obs.next >= m.num_states || query.state >= m.num_states ||
        next >= m.num_states || obs.action >= m.num_actions || query.action >= m.num_actions) {
        throw PreconditionViolation("oracle: state or action index out of range");
    }
    if (!(m.p(obs.state, obs.action, obs.next) > 0.0)) {
        throw PreconditionViolation("oracle: observed transition has zero probability");
    }
}

std::vector<JointConstraint> joint_constraints(const Mdp& m, ObservedTransition obs,
                                               StateAction query, AssumptionSet assumptions) {
    std::vector<JointConstraint> out;
    if (obs.pair() == query || assumptions == AssumptionSet::NoAssumptions) return out;
    const auto p = m.row(obs.state, obs.action);
    const auto r = m.row(query.state, query.action);
    const State k = obs.next;
    const double pk = p[k];
    for (State j = 0; j < m.num_states; ++j) {
        if (cs_condition(m, obs, query, j)) out.push_back({k, j, Relation::LessEqual, 0.0});
    }
    if (assumptions == AssumptionSet::CsAndMonotonicity) {
        if (r[k] > 0.0) out.push_back({k, k, Relation::GreaterEqual, r[k] * pk});
        for (State j = 0; j < m.num_states; ++j) {
            if (j != k && p[j] > 0.0 && r[j] > 0.0) {
                out.push_back({k, j, Relation::LessEqual, r[j] * pk});
            }
        }
    }
    return out;
}

Coupling coupling_from(const std::vector<double>& x, std::size_t n) {
    Coupling c(n);
    for (std::size_t i = 0; i < n * n; ++i) c.q[i] = std::max(0.0, x[i]);
    return c;
}

/**
 * Columns of the mechanism LP. Row layout: (digit d, successor s') at d*S + s',
 * then one row per joint constraint.
 *
 * A mechanism's reduced cost is sum_d g[d][f_d] + J(f_obs, f_query): every
 * marginal row touches exactly one digit, and the objective and joint rows
 * depend only on the observed and query digits. Minimising that expression
 * digit by digit prices all |S|^(|S||A|) columns in O(|S|^2 |A|).
 */
class ThetaColumns final : public ColumnSource {
public:
    ThetaColumns(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                 std::vector<JointConstraint> joint, std::size_t count, ThetaPricing pricing)
        : S_(m.num_states), D_(m.num_states * m.num_actions), count_(count), k_(obs.next),
          next_(next), d_obs_(obs.state * m.num_actions + obs.action),
          d_query_(query.state * m.num_actions + query.action), joint_(std::move(joint)),
          pricing_(pricing), place_(D_, 1) {
        for (std::size_t d = 1; d < D_; ++d) place_[d] = place_[d - 1] * S_;
    }

    std::size_t num_rows() const { return D_ * S_ + joint_.size(); }
    std::size_t num_columns() const override { return count_; }

    State digit(std::size_t u, std::size_t d) const { return (u / place_[d]) % S_; }

    double cost(std::size_t u) const override {
        return digit(u, d_obs_) == k_ && digit(u, d_query_) == next_ ? 1.0 : 0.0;
    }

    void column(std::size_t u, SparseColumn& out) const override {
        for (std::size_t d = 0; d < D_; ++d) out.push(d * S_ + digit(u, d), 1.0);
        const State a = digit(u, d_obs_);
        const State b = digit(u, d_query_);
        for (std::size_t e = 0; e < joint_.size(); ++e) {
            if (joint_[e].a == a && joint_[e].b == b) out.push(D_ * S_ + e, 1.0);
        }
    }

    PricedColumn price_best(std::span<const double> duals, double cost_scale) const override {
        if (pricing_ == ThetaPricing::Exhaustive) return ColumnSource::price_best(duals, cost_scale);
        const Separable f = reduced_costs(duals, cost_scale);
        std::vector<int> fixed(D_, -1);
        const auto [value, u] = minimize(f, fixed);
        return {u, value};
    }

    std::optional<std::size_t> price_first(std::span<const double> duals, double cost_scale,
                                           double tol) const override {
        if (pricing_ == ThetaPricing::Exhaustive) {
            return ColumnSource::price_first(duals, cost_scale, tol);
        }
        const Separable f = reduced_costs(duals, cost_scale);
        std::vector<int> fixed(D_, -1);
        if (minimize(f, fixed).first >= -tol) return std::nullopt;
        // Lowest index: fix digits from the most significant down, each to the
        // smallest value that still admits a completion below -tol.
        for (std::size_t d = D_; d-- > 0;) {
            for (State v = 0; v < S_; ++v) {
                fixed[d] = static_cast<int>(v);
                if (minimize(f, fixed).first < -tol) break;
            }
        }
        return minimize(f, fixed).second;
    }

    std::optional<std::size_t> find_nonzero(std::span<const double> weights,
                                            double tol) const override {
        if (pricing_ == ThetaPricing::Exhaustive) return ColumnSource::find_nonzero(weights, tol);
        Separable f = weighted(weights);
        std::vector<int> fixed(D_, -1);
        if (auto [value, u] = minimize(f, fixed); value < -tol) return u;
        for (auto& v : f.g) v = -v;
        for (auto& v : f.joint) v = -v;
        if (auto [value, u] = minimize(f, fixed); value < -tol) return u;
        return std::nullopt;
    }

private:
    struct Separable {
        std::vector<double> g;     // [d][v]
        std::vector<double> joint; // [a][b]
    };

    Separable weighted(std::span<const double> w) const {
        Separable f{std::vector<double>(w.begin(), w.begin() + D_ * S_),
                    std::vector<double>(S_ * S_, 0.0)};
        for (std::size_t e = 0; e < joint_.size(); ++e) {
            f.joint[joint_[e].a * S_ + joint_[e].b] += w[D_ * S_ + e];
        }
        return f;
    }

    Separable reduced_costs(std::span<const double> duals, double cost_scale) const {
        Separable f = weighted(duals);
        for (auto& v : f.g) v = -v;
        for (auto& v : f.joint) v = -v;
        f.joint[k_ * S_ + next_] += cost_scale;
        return f;
    }

    /// Minimum of f over mechanisms agreeing with `fixed` (-1 = free), and the
    /// lowest-index minimiser.
    std::pair<double, std::size_t> minimize(const Separable& f, const std::vector<int>& fixed) const {
        double total = 0.0;
        std::size_t u = 0;
        auto choices = [&](std::size_t d, State v) {
            return fixed[d] < 0 || static_cast<State>(fixed[d]) == v;
        };
        for (std::size_t d = 0; d < D_; ++d) {
            if (d == d_obs_ || d == d_query_) continue;
            double best = std::numeric_limits<double>::infinity();
            State arg = 0;
            for (State v = 0; v < S_; ++v) {
                if (choices(d, v) && f.g[d * S_ + v] < best) {
                    best = f.g[d * S_ + v];
                    arg = v;
                }
            }
            total += best;
            u += arg * place_[d];
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_u = 0;
        for (State a = 0; a < S_; ++a) {
            if (!choices(d_obs_, a)) continue;
            for (State b = 0; b < S_; ++b) {
                if (!choices(d_query_, b)) continue;
                double value;
                std::size_t digits;
                if (d_obs_ == d_query_) {
                    if (a != b) continue;
                    value = f.g[d_obs_ * S_ + a] + f.joint[a * S_ + a];
                    digits = a * place_[d_obs_];
                } else {
                    value = f.g[d_obs_ * S_ + a] + f.g[d_query_ * S_ + b] + f.joint[a * S_ + b];
                    digits = a * place_[d_obs_] + b * place_[d_query_];
                }
                if (value < best || (value == best && digits < best_u)) {
                    best = value;
                    best_u = digits;
                }
            }
        }
        return {total + best, u + best_u};
    }

    std::size_t S_;
    std::size_t D_;
    std::size_t count_;
    State k_;
    State next_;
    std::size_t d_obs_;
    std::size_t d_query_;
    std::vector<JointConstraint> joint_;
    ThetaPricing pricing_;
    std::vector<std::size_t> place_;
};

} // namespace

State CanonicalTheta::output(std::size_t u, State s, Action a) const {
    std::size_t d = s * num_actions + a;
    for (; d > 0; --d) u /= num_states;
    return u % num_states;
}

std::uint64_t mechanism_count(std::size_t num_states, std::size_t num_actions) {
    std::uint64_t count = 1;
    for (std::size_t d = 0; d < num_states * num_actions; ++d) {
        count *= num_states;
        if (count > kMaxMechanisms) return kMaxMechanisms + 1;
    }
    return count;
}

LpProblem coupling_lp(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                      AssumptionSet assumptions, Sense sense) {
    check_query(m, obs, query, next);
    const std::size_t S = m.num_states;
    const auto p = m.row(obs.state, obs.action);
    const auto r = m.row(query.state, query.action);
    auto var = [S](State i, State j) { return i * S + j; };

    LpProblem lp(S * S, sense);
    lp.objective[var(obs.next, next)] = 1.0;
    for (State i = 0; i < S; ++i) {
        std::vector<LinearTerm> row_terms;
        std::vector<LinearTerm> col_terms;
        for (State j = 0; j < S; ++j) {
            row_terms.push_back({var(i, j), 1.0});
            col_terms.push_back({var(j, i), 1.0});
        }
        lp.add_constraint(std::move(row_terms), Relation::Equal, p[i]);
        lp.add_constraint(std::move(col_terms), Relation::Equal, r[i]);
    }
    if (obs.pair() == query) {
        for (State i = 0; i < S; ++i) {
            for (State j = 0; j < S; ++j) {
                if (i != j) lp.upper[var(i, j)] = 0.0;
            }
        }
    }
    for (const auto& c : joint_constraints(m, obs, query, assumptions)) {
        lp.add_constraint({{var(c.a, c.b), 1.0}}, c.relation, c.rhs);
    }
    return lp;
}

OracleResult oracle_solve(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                          AssumptionSet assumptions) {
    const double pk = m.p(obs.state, obs.action, obs.next);
    OracleResult out;
    try {
        const LpSolution lo = lp_solve(coupling_lp(m, obs, query, next, assumptions, Sense::Minimize));
        const LpSolution hi = lp_solve(coupling_lp(m, obs, query, next, assumptions, Sense::Maximize));
        out.interval = {std::max(0.0, lo.optimum / pk), std::min(1.0, hi.optimum / pk)};
        out.min_coupling = coupling_from(lo.x, m.num_states);
        out.max_coupling = coupling_from(hi.x, m.num_states);
    } catch (const LpInfeasible&) {
        throw PreconditionViolation("coupling LP is infeasible for query (" +
                                    std::to_string(query.state) + "," +
                                    std::to_string(query.action) + "->" + std::to_string(next) +
                                    ")");
    }
    return out;
}

ProbInterval oracle_bounds(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                           AssumptionSet assumptions) {
    return oracle_solve(m, obs, query, next, assumptions).interval;
}

bool check_coupling_feasible(const Coupling& c, const Mdp& m, ObservedTransition obs,
                             StateAction query, AssumptionSet assumptions, double tol) {
    const std::size_t S = m.num_states;
    if (c.n != S || c.q.size() != S * S) return false;
    const auto p = m.row(obs.state, obs.action);
    const auto r = m.row(query.state, query.action);
    for (double v : c.q) {
        if (!(v >= -tol)) return false;
    }
    for (State i = 0; i < S; ++i) {
        double row = 0.0;
        double col = 0.0;
        for (State j = 0; j < S; ++j) {
            row += c.at(i, j);
            col += c.at(j, i);
        }
        if (std::abs(row - p[i]) > tol || std::abs(col - r[i]) > tol) return false;
    }
    if (obs.pair() == query) {
        for (State i = 0; i < S; ++i) {
            for (State j = 0; j < S; ++j) {
                if (i != j && std::abs(c.at(i, j)) > tol) return false;
            }
        }
    }
    for (const auto& jc : joint_constraints(m, obs, query, assumptions)) {
        const double v = c.at(jc.a, jc.b);
        switch (jc.relation) {
        case Relation::LessEqual:
            if (v > jc.rhs + tol) return false;
            break;
        case Relation::GreaterEqual:
            if (v < jc.rhs - tol) return false;
            break;
        case Relation::Equal:
            if (std::abs(v - jc.rhs) > tol) return false;
            break;
        }
    }
    return true;
}

ThetaResult enumerate_theta_solve(const Mdp& m, ObservedTransition obs, StateAction query,
                                  State next, AssumptionSet assumptions, ThetaPricing pricing) {
    check_query(m, obs, query, next);
    const std::uint64_t count = mechanism_count(m.num_states, m.num_actions);
    if (count > kMaxMechanisms) {
        throw ScaleExceeded("mechanism enumeration needs |S|^(|S||A|) <= " +
                            std::to_string(kMaxMechanisms));
    }
    const std::size_t S = m.num_states;
    const std::size_t A = m.num_actions;
    auto joint = joint_constraints(m, obs, query, assumptions);

    // Sum theta = 1 is implied by any one pair's marginal rows and is not added.
    std::vector<RowBound> rows;
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            for (State s2 = 0; s2 < S; ++s2) rows.push_back({Relation::Equal, m.p(s, a, s2)});
        }
    }
    for (const auto& c : joint) rows.push_back({c.relation, c.rhs});

    const ThetaColumns columns(m, obs, query, next, std::move(joint),
                               static_cast<std::size_t>(count), pricing);
    const double pk = m.p(obs.state, obs.action, obs.next);
    ThetaResult out;
    try {
        LpSolution lo = solve_columns(columns, rows, Sense::Minimize);
        LpSolution hi = solve_columns(columns, rows, Sense::Maximize);
        out.interval = {std::max(0.0, lo.optimum / pk), std::min(1.0, hi.optimum / pk)};
        out.min_theta = {S, A, std::move(lo.x)};
        out.max_theta = {S, A, std::move(hi.x)};
    } catch (const LpInfeasible&) {
        throw PreconditionViolation("mechanism LP is infeasible");
    }
    return out;
}

ProbInterval enumerate_theta_bounds(const Mdp& m, ObservedTransition obs, StateAction query,
                                    State next, AssumptionSet assumptions, ThetaPricing pricing) {
    return enumerate_theta_solve(m, obs, query, next, assumptions, pricing).interval;
}

bool check_theta_feasible(const CanonicalTheta& theta, const Mdp& m, double tol) {
    if (theta.num_states != m.num_states || theta.num_actions != m.num_actions) return false;
    if (theta.mechanism_count() != mechanism_count(m.num_states, m.num_actions)) return false;
    std::vector<double> marginal(m.transition.size(), 0.0);
    double total = 0.0;
    for (std::size_t u = 0; u < theta.mechanism_count(); ++u) {
        const double w = theta.theta[u];
        if (!(w >= -tol)) return false;
        total += w;
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                marginal[(s * m.num_actions + a) * m.num_states + theta.output(u, s, a)] += w;
            }
        }
    }
    if (std::abs(total - 1.0) > tol) return false;
    for (std::size_t i = 0; i < marginal.size(); ++i) {
        if (std::abs(marginal[i] - m.transition[i]) > tol) return false;
    }
    return true;
}

} // namespace cfmdp
