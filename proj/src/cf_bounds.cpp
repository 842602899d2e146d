#include "cfmdp/cf_bounds.hpp"

#include "cfmdp/errors.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace cfmdp {

std::string_view to_string(AssumptionSet assumptions) {
    switch (assumptions) {
    case AssumptionSet::NoAssumptions:
        return "none";
    case AssumptionSet::CsOnly:
        return "cs";
    case AssumptionSet::CsAndMonotonicity:
        return "cs+mon";
    }
    return "unknown";
}

AssumptionSet parse_assumptions(std::string_view text) {
    if (text == "none") return AssumptionSet::NoAssumptions;
    if (text == "cs") return AssumptionSet::CsOnly;
    if (text == "cs+mon" || text == "cs+m") return AssumptionSet::CsAndMonotonicity;
    throw InvalidInput("unknown assumption set '" + std::string(text) +
                       "' (expected none, cs or cs+mon)");
}

namespace {

constexpr double kSlack = 1e-9;

/// The two transition rows a bound depends on.
struct RowPair {
    std::span<const double> obs;   // P(. | s_t, a_t)
    std::span<const double> query; // P(. | s~, a~)
    State observed_next;           // s_{t+1}
    double p_obs;                  // P(s_{t+1} | s_t, a_t)

    RowPair(const Mdp& m, ObservedTransition o, StateAction q)
        : obs(m.row(o.state, o.action)), query(m.row(q.state, q.action)), observed_next(o.next),
          p_obs(m.p(o.state, o.action, o.next)) {
        if (!(p_obs > 0.0)) {
            throw PreconditionViolation("observed transition has zero probability");
        }
    }

    bool cs(State next) const {
        return obs[next] > 0.0 && query[observed_next] * obs[next] > query[next] * p_obs;
    }
};

void check_indices(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    if (obs.state >= m.num_states || obs.next >= m.num_states || query.state >= m.num_states ||
        next >= m.num_states || obs.action >= m.num_actions || query.action >= m.num_actions) {
        throw PreconditionViolation("state or action index out of range");
    }
}

/// Clamps rounding slack; anything beyond kSlack is a genuine inconsistency.
ProbInterval finalize(double lb, double ub) {
    if (ub > 1.0) {
        if (ub - 1.0 > kSlack) throw PreconditionViolation("upper bound exceeds 1");
        ub = 1.0;
    }
    if (ub < 0.0) {
        if (ub < -kSlack) throw PreconditionViolation("negative upper bound");
        ub = 0.0;
    }
    if (lb < 0.0) {
        if (lb < -kSlack) throw PreconditionViolation("negative lower bound");
        lb = 0.0;
    }
    if (lb > ub) {
        if (lb - ub > kSlack) throw PreconditionViolation("lower bound exceeds upper bound");
        lb = ub;
    }
    return {lb, ub};
}

double no_assumption_ub(const RowPair& rows, State next) {
    return std::min(1.0, rows.query[next] / rows.p_obs);
}

double no_assumption_lb(const RowPair& rows, State next) {
    return std::max(0.0, (rows.query[next] - (1.0 - rows.p_obs)) / rows.p_obs);
}

double sum_except(std::span<const double> values, State skip) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != skip) total += values[i];
    }
    return total;
}

void require_distinct(ObservedTransition obs, StateAction query, const char* op) {
    if (obs.pair() == query) {
        throw PreconditionViolation(std::string(op) +
                                    ": the observed pair always takes the identity bounds");
    }
}

void require_relation(const Mdp& m, ObservedTransition obs, StateAction query,
                      SupportRelation expected, const char* op) {
    if (classify_support(m, obs.pair(), query) != expected) {
        throw PreconditionViolation(std::string(op) + ": support relation does not apply to (" +
                                    std::to_string(query.state) + "," +
                                    std::to_string(query.action) + ")");
    }
}

} // namespace

SupportRelation classify_support(const Mdp& m, StateAction observed, StateAction query) {
    if (observed == query) return SupportRelation::ObservedPair;
    const auto a = m.row(observed.state, observed.action);
    const auto b = m.row(query.state, query.action);
    for (State s = 0; s < m.num_states; ++s) {
        if (a[s] > 0.0 && b[s] > 0.0) return SupportRelation::Overlapping;
    }
    return SupportRelation::Disjoint;
}

bool cs_condition(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    check_indices(m, obs, query, next);
    return RowPair(m, obs, query).cs(next);
}

std::vector<ProbInterval> bounds_observed_pair(const Mdp& m, ObservedTransition obs) {
    if (!(m.p(obs.state, obs.action, obs.next) > 0.0)) {
        throw PreconditionViolation("observed transition has zero probability");
    }
    std::vector<ProbInterval> row(m.num_states, ProbInterval{0.0, 0.0});
    row[obs.next] = {1.0, 1.0};
    return row;
}

ProbInterval bounds_disjoint(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    check_indices(m, obs, query, next);
    require_relation(m, obs, query, SupportRelation::Disjoint, "bounds_disjoint");
    const RowPair rows(m, obs, query);
    const double p = rows.query[next];
    const double p_obs = rows.p_obs;
    const double ub = p < p_obs ? p / p_obs : 1.0;
    const double lb = p > 1.0 - p_obs ? (p - (1.0 - p_obs)) / p_obs : 0.0;
    return finalize(lb, ub);
}

double bounds_overlapping_ub(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    check_indices(m, obs, query, next);
    require_relation(m, obs, query, SupportRelation::Overlapping, "bounds_overlapping_ub");
    const RowPair rows(m, obs, query);
    const State k = rows.observed_next;
    const double p_next_query = rows.query[k];
    if (next == k) return std::min(rows.p_obs, p_next_query) / rows.p_obs;
    if (rows.cs(next)) return 0.0;
    if (rows.obs[next] > 0.0) return std::min(rows.query[next], 1.0 - p_next_query);
    return std::min(1.0 - p_next_query, rows.query[next] / rows.p_obs);
}

double bounds_overlapping_lb(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                             std::span<const double> ub_row) {
    check_indices(m, obs, query, next);
    require_relation(m, obs, query, SupportRelation::Overlapping, "bounds_overlapping_lb");
    if (ub_row.size() != m.num_states) {
        throw PreconditionViolation("bounds_overlapping_lb: ub_row has the wrong length");
    }
    const RowPair rows(m, obs, query);
    const double rest = 1.0 - sum_except(ub_row, next);
    if (next == rows.observed_next) return std::max(rows.query[next], rest);
    if (rows.cs(next)) return 0.0;
    return std::max(0.0, rest);
}

ProbInterval bounds_no_assumption(const Mdp& m, ObservedTransition obs, StateAction query,
                                  State next) {
    check_indices(m, obs, query, next);
    require_distinct(obs, query, "bounds_no_assumption");
    const RowPair rows(m, obs, query);
    return finalize(no_assumption_lb(rows, next), no_assumption_ub(rows, next));
}

double cs_only_ub(const Mdp& m, ObservedTransition obs, StateAction query, State next) {
    check_indices(m, obs, query, next);
    require_distinct(obs, query, "cs_only_ub");
    const RowPair rows(m, obs, query);
    return rows.cs(next) ? 0.0 : no_assumption_ub(rows, next);
}

ProbInterval bounds_cs_only(const Mdp& m, ObservedTransition obs, StateAction query, State next,
                            std::span<const double> ub_row) {
    check_indices(m, obs, query, next);
    require_distinct(obs, query, "bounds_cs_only");
    if (ub_row.size() != m.num_states) {
        throw PreconditionViolation("bounds_cs_only: ub_row has the wrong length");
    }
    const RowPair rows(m, obs, query);
    const double ub = rows.cs(next) ? 0.0 : no_assumption_ub(rows, next);
    double lb = 0.0;
    if (classify_support(m, obs.pair(), query) == SupportRelation::Disjoint) {
        lb = no_assumption_lb(rows, next);
    } else if (rows.cs(next)) {
        lb = 0.0;
    } else {
        lb = std::max(0.0, 1.0 - sum_except(ub_row, next));
    }
    return finalize(lb, ub);
}

std::vector<ProbInterval> counterfactual_row(const Mdp& m, ObservedTransition obs,
                                             StateAction query, AssumptionSet assumptions) {
    const auto relation = classify_support(m, obs.pair(), query);
    if (relation == SupportRelation::ObservedPair) return bounds_observed_pair(m, obs);

    const std::size_t S = m.num_states;
    std::vector<ProbInterval> row(S);
    switch (assumptions) {
    case AssumptionSet::NoAssumptions:
        for (State next = 0; next < S; ++next) row[next] = bounds_no_assumption(m, obs, query, next);
        break;
    case AssumptionSet::CsOnly: {
        std::vector<double> ub(S);
        for (State next = 0; next < S; ++next) ub[next] = cs_only_ub(m, obs, query, next);
        for (State next = 0; next < S; ++next) row[next] = bounds_cs_only(m, obs, query, next, ub);
        break;
    }
    case AssumptionSet::CsAndMonotonicity:
        if (relation == SupportRelation::Disjoint) {
            for (State next = 0; next < S; ++next) row[next] = bounds_disjoint(m, obs, query, next);
        } else {
            std::vector<double> ub(S);
            for (State next = 0; next < S; ++next) {
                ub[next] = bounds_overlapping_ub(m, obs, query, next);
            }
            for (State next = 0; next < S; ++next) {
                row[next] = finalize(bounds_overlapping_lb(m, obs, query, next, ub), ub[next]);
            }
        }
        break;
    }
    return row;
}

IntervalCfMdp build_interval_cfmdp(std::shared_ptr<const Mdp> m, const ObservedPath& path,
                                   AssumptionSet assumptions) {
    if (!m) throw PreconditionViolation("build_interval_cfmdp: null model");
    require_valid_path(*m, path);
    const std::size_t S = m->num_states;
    const std::size_t A = m->num_actions;

    IntervalCfMdp icf;
    icf.horizon = path.length();
    icf.num_states = S;
    icf.num_actions = A;
    icf.assumptions = assumptions;
    icf.path = path;
    icf.intervals.resize(icf.horizon * S * A * S);

    for (std::size_t t = 0; t < icf.horizon; ++t) {
        const auto obs = path.step(t);
        for (State s = 0; s < S; ++s) {
            for (Action a = 0; a < A; ++a) {
                std::vector<ProbInterval> row;
                try {
                    row = counterfactual_row(*m, obs, {s, a}, assumptions);
                } catch (const PreconditionViolation& e) {
                    std::ostringstream msg;
                    msg << "at (t=" << t << ", s=" << s << ", a=" << a << "): " << e.what();
                    throw PreconditionViolation(msg.str());
                }
                double sum_lb = 0.0;
                double sum_ub = 0.0;
                for (const auto& iv : row) {
                    sum_lb += iv.lb;
                    sum_ub += iv.ub;
                }
                if (sum_lb > 1.0 + kSlack || sum_ub < 1.0 - kSlack) {
                    std::ostringstream msg;
                    msg << "interval row (t=" << t << ", s=" << s << ", a=" << a
                        << ") is infeasible: sum lb = " << sum_lb << ", sum ub = " << sum_ub;
                    throw PreconditionViolation(msg.str());
                }
                std::copy(row.begin(), row.end(), icf.intervals.begin() + icf.row_offset(t, s, a));
            }
        }
    }
    icf.base = std::move(m);
    return icf;
}

IntervalCfMdp build_interval_cfmdp(const Mdp& m, const ObservedPath& path,
                                   AssumptionSet assumptions) {
    return build_interval_cfmdp(std::make_shared<const Mdp>(m), path, assumptions);
}

} // namespace cfmdp
