#include "cfmdp/lp.hpp"

#include "cfmdp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cfmdp {

LpProblem::LpProblem(std::size_t num_variables, Sense sense)
    : sense(sense), objective(num_variables, 0.0), lower(num_variables, 0.0),
      upper(num_variables, std::numeric_limits<double>::infinity()) {}

void LpProblem::add_constraint(std::vector<LinearTerm> terms, Relation relation, double rhs) {
    constraints.push_back({std::move(terms), relation, rhs});
}

double ColumnSource::dot(std::span<const double> weights, std::size_t j,
                         SparseColumn& scratch) const {
    scratch.clear();
    column(j, scratch);
    double total = 0.0;
    for (std::size_t k = 0; k < scratch.rows.size(); ++k) {
        total += weights[scratch.rows[k]] * scratch.values[k];
    }
    return total;
}

PricedColumn ColumnSource::price_best(std::span<const double> duals, double cost_scale) const {
    PricedColumn best;
    SparseColumn scratch;
    for (std::size_t j = 0; j < num_columns(); ++j) {
        const double rc = cost_scale * cost(j) - dot(duals, j, scratch);
        if (rc < best.reduced_cost) best = {j, rc};
    }
    return best;
}

std::optional<std::size_t> ColumnSource::price_first(std::span<const double> duals,
                                                     double cost_scale, double tol) const {
    SparseColumn scratch;
    for (std::size_t j = 0; j < num_columns(); ++j) {
        if (cost_scale * cost(j) - dot(duals, j, scratch) < -tol) return j;
    }
    return std::nullopt;
}

std::optional<std::size_t> ColumnSource::find_nonzero(std::span<const double> weights,
                                                      double tol) const {
    SparseColumn scratch;
    for (std::size_t j = 0; j < num_columns(); ++j) {
        if (std::abs(dot(weights, j, scratch)) > tol) return j;
    }
    return std::nullopt;
}

namespace {

class ExplicitColumns final : public ColumnSource {
public:
    ExplicitColumns(std::vector<double> costs, std::vector<SparseColumn> columns)
        : costs_(std::move(costs)), columns_(std::move(columns)) {}

    std::size_t num_columns() const override { return costs_.size(); }
    double cost(std::size_t j) const override { return costs_[j]; }
    void column(std::size_t j, SparseColumn& out) const override {
        out.rows.insert(out.rows.end(), columns_[j].rows.begin(), columns_[j].rows.end());
        out.values.insert(out.values.end(), columns_[j].values.begin(), columns_[j].values.end());
    }

private:
    std::vector<double> costs_;
    std::vector<SparseColumn> columns_;
};

/**
 * Two-phase revised simplex with an explicit dense basis inverse.
 *
 * Variable ids: [0, n) structural, [n, n+m) slack/surplus of row i,
 * [n+m, n+2m) artificial of row i. Rows are stored with rhs >= 0; flip_[i]
 * records the sign applied to the caller's row. Pricing uses the most negative
 * reduced cost and falls back to Bland's rule after a streak of degenerate pivots.
 */
class RevisedSimplex {
public:
    RevisedSimplex(const ColumnSource& source, std::span<const RowBound> rows,
                   const SimplexOptions& options)
        : source_(source), options_(options), m_(rows.size()), n_(source.num_columns()),
          flip_(m_, 1.0), b_(m_), slack_sign_(m_, 0.0), basic_(m_), binv_(m_ * m_, 0.0),
          xb_(m_), duals_(m_), raw_duals_(m_), d_(m_) {
        for (std::size_t i = 0; i < m_; ++i) {
            Relation rel = rows[i].relation;
            double rhs = rows[i].rhs;
            if (rhs < 0.0) {
                flip_[i] = -1.0;
                rhs = -rhs;
                if (rel == Relation::LessEqual) {
                    rel = Relation::GreaterEqual;
                } else if (rel == Relation::GreaterEqual) {
                    rel = Relation::LessEqual;
                }
            }
            b_[i] = rhs;
            switch (rel) {
            case Relation::LessEqual:
                slack_sign_[i] = 1.0;
                basic_[i] = n_ + i;
                break;
            case Relation::GreaterEqual:
                slack_sign_[i] = -1.0;
                basic_[i] = n_ + m_ + i;
                break;
            case Relation::Equal:
                basic_[i] = n_ + m_ + i;
                break;
            }
            binv_[i * m_ + i] = 1.0;
            xb_[i] = rhs;
        }
    }

    LpSolution solve(Sense sense) {
        cost_scale_ = sense == Sense::Minimize ? 1.0 : -1.0;

        phase_one_ = true;
        iterate();
        refactor();
        double infeasibility = 0.0;
        double scale = 1.0;
        for (double bi : b_) scale = std::max(scale, bi);
        for (std::size_t i = 0; i < m_; ++i) {
            if (is_artificial(basic_[i])) infeasibility += std::max(0.0, xb_[i]);
        }
        if (infeasibility > options_.feasibility_tolerance * scale) throw LpInfeasible();
        drive_out_artificials();

        phase_one_ = false;
        iterate();
        refactor();

        LpSolution out;
        out.iterations = iterations_;
        out.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basic_[i] < n_) out.x[basic_[i]] = std::max(0.0, xb_[i]);
        }
        for (std::size_t i = 0; i < m_; ++i) {
            if (basic_[i] < n_) out.optimum += source_.cost(basic_[i]) * out.x[basic_[i]];
        }
        return out;
    }

private:
    bool is_artificial(std::size_t id) const { return id >= n_ + m_; }

    void fetch(std::size_t id, SparseColumn& out) const {
        out.clear();
        if (id < n_) {
            source_.column(id, out);
            for (std::size_t k = 0; k < out.rows.size(); ++k) out.values[k] *= flip_[out.rows[k]];
        } else if (id < n_ + m_) {
            out.push(id - n_, slack_sign_[id - n_]);
        } else {
            out.push(id - n_ - m_, 1.0);
        }
    }

    double basic_cost(std::size_t id) const {
        if (phase_one_) return is_artificial(id) ? 1.0 : 0.0;
        return id < n_ ? cost_scale_ * source_.cost(id) : 0.0;
    }

    void compute_duals() {
        std::fill(duals_.begin(), duals_.end(), 0.0);
        for (std::size_t k = 0; k < m_; ++k) {
            const double c = basic_cost(basic_[k]);
            if (c == 0.0) continue;
            const double* row = &binv_[k * m_];
            for (std::size_t i = 0; i < m_; ++i) duals_[i] += c * row[i];
        }
        for (std::size_t i = 0; i < m_; ++i) raw_duals_[i] = duals_[i] * flip_[i];
    }

    /// Returns the entering variable id, or nullopt at optimality.
    std::optional<std::size_t> choose_entering() {
        const double structural_scale = phase_one_ ? 0.0 : cost_scale_;
        const double tol = options_.optimality_tolerance;
        if (bland_) {
            if (auto j = source_.price_first(raw_duals_, structural_scale, tol)) return *j;
            for (std::size_t i = 0; i < m_; ++i) {
                if (slack_sign_[i] != 0.0 && -duals_[i] * slack_sign_[i] < -tol) return n_ + i;
            }
            return std::nullopt;
        }
        const PricedColumn best = source_.price_best(raw_duals_, structural_scale);
        std::size_t entering = best.column;
        double best_rc = best.reduced_cost;
        for (std::size_t i = 0; i < m_; ++i) {
            if (slack_sign_[i] == 0.0) continue;
            const double rc = -duals_[i] * slack_sign_[i];
            if (rc < best_rc) {
                best_rc = rc;
                entering = n_ + i;
            }
        }
        if (!(best_rc < -tol)) return std::nullopt;
        return entering;
    }

    void compute_direction(std::size_t id) {
        fetch(id, column_);
        std::fill(d_.begin(), d_.end(), 0.0);
        for (std::size_t k = 0; k < column_.rows.size(); ++k) {
            const std::size_t col = column_.rows[k];
            const double v = column_.values[k];
            for (std::size_t i = 0; i < m_; ++i) d_[i] += binv_[i * m_ + col] * v;
        }
    }

    void pivot(std::size_t r, std::size_t entering, double step) {
        for (std::size_t i = 0; i < m_; ++i) xb_[i] -= step * d_[i];
        xb_[r] = step;
        const double pivot_value = d_[r];
        double* prow = &binv_[r * m_];
        for (std::size_t j = 0; j < m_; ++j) prow[j] /= pivot_value;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || d_[i] == 0.0) continue;
            const double factor = d_[i];
            double* row = &binv_[i * m_];
            for (std::size_t j = 0; j < m_; ++j) row[j] -= factor * prow[j];
        }
        basic_[r] = entering;
    }

    void iterate() {
        bland_ = false;
        std::size_t degenerate = 0;
        for (;;) {
            if (iterations_ >= options_.max_iterations) {
                throw LpError("simplex iteration limit reached");
            }
            if (iterations_ > 0 && iterations_ % options_.refactor_interval == 0) refactor();
            compute_duals();
            const auto entering = choose_entering();
            if (!entering) return;
            compute_direction(*entering);

            std::optional<std::size_t> leave;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (d_[i] <= options_.pivot_tolerance) continue;
                const double ratio = std::max(0.0, xb_[i]) / d_[i];
                if (!leave || ratio < best_ratio - 1e-12) {
                    leave = i;
                    best_ratio = ratio;
                } else if (ratio <= best_ratio + 1e-12) {
                    const bool better = bland_ ? basic_[i] < basic_[*leave]
                                               : d_[i] > d_[*leave];
                    if (better) {
                        leave = i;
                        best_ratio = std::min(best_ratio, ratio);
                    }
                }
            }
            if (!leave) {
                if (phase_one_) throw LpError("phase one reported an unbounded ray");
                throw LpUnbounded();
            }
            pivot(*leave, *entering, best_ratio);
            ++iterations_;
            if (best_ratio <= 1e-12) {
                if (++degenerate >= options_.degenerate_streak) bland_ = true;
            } else {
                degenerate = 0;
                bland_ = false;
            }
        }
    }

    void drive_out_artificials() {
        std::vector<double> weights(m_);
        for (std::size_t r = 0; r < m_; ++r) {
            if (!is_artificial(basic_[r])) continue;
            const double* row = &binv_[r * m_];
            for (std::size_t i = 0; i < m_; ++i) weights[i] = row[i] * flip_[i];
            std::optional<std::size_t> entering = source_.find_nonzero(weights, 1e-9);
            if (!entering) {
                for (std::size_t i = 0; i < m_; ++i) {
                    if (slack_sign_[i] != 0.0 && std::abs(row[i] * slack_sign_[i]) > 1e-9) {
                        entering = n_ + i;
                        break;
                    }
                }
            }
            // No candidate: the row is redundant and its artificial stays basic at zero.
            if (!entering) continue;
            compute_direction(*entering);
            pivot(r, *entering, 0.0);
            ++iterations_;
        }
        refactor();
    }

    void refactor() {
        std::vector<double> basis(m_ * m_, 0.0);
        SparseColumn col;
        for (std::size_t k = 0; k < m_; ++k) {
            fetch(basic_[k], col);
            for (std::size_t e = 0; e < col.rows.size(); ++e) {
                basis[col.rows[e] * m_ + k] += col.values[e];
            }
        }
        // Gauss-Jordan with partial pivoting on [B | I].
        std::fill(binv_.begin(), binv_.end(), 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t p = c;
            for (std::size_t i = c + 1; i < m_; ++i) {
                if (std::abs(basis[i * m_ + c]) > std::abs(basis[p * m_ + c])) p = i;
            }
            if (std::abs(basis[p * m_ + c]) < 1e-13) throw LpError("singular simplex basis");
            if (p != c) {
                for (std::size_t j = 0; j < m_; ++j) {
                    std::swap(basis[p * m_ + j], basis[c * m_ + j]);
                    std::swap(binv_[p * m_ + j], binv_[c * m_ + j]);
                }
            }
            const double inv = 1.0 / basis[c * m_ + c];
            for (std::size_t j = 0; j < m_; ++j) {
                basis[c * m_ + j] *= inv;
                binv_[c * m_ + j] *= inv;
            }
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == c) continue;
                const double f = basis[i * m_ + c];
                if (f == 0.0) continue;
                for (std::size_t j = 0; j < m_; ++j) {
                    basis[i * m_ + j] -= f * basis[c * m_ + j];
                    binv_[i * m_ + j] -= f * binv_[c * m_ + j];
                }
            }
        }
        for (std::size_t i = 0; i < m_; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < m_; ++j) v += binv_[i * m_ + j] * b_[j];
            xb_[i] = v;
        }
    }

    const ColumnSource& source_;
    SimplexOptions options_;
    std::size_t m_;
    std::size_t n_;
    std::vector<double> flip_;
    std::vector<double> b_;
    std::vector<double> slack_sign_;
    std::vector<std::size_t> basic_;
    std::vector<double> binv_;
    std::vector<double> xb_;
    std::vector<double> duals_;
    std::vector<double> raw_duals_;
    std::vector<double> d_;
    SparseColumn column_;
    double cost_scale_ = 1.0;
    bool phase_one_ = true;
    bool bland_ = false;
    std::size_t iterations_ = 0;
};

} // namespace

LpSolution solve_columns(const ColumnSource& columns, std::span<const RowBound> rows, Sense sense,
                         const SimplexOptions& options) {
    RevisedSimplex simplex(columns, rows, options);
    return simplex.solve(sense);
}

LpSolution lp_solve(const LpProblem& problem, const SimplexOptions& options) {
    const std::size_t n = problem.num_variables();
    if (problem.lower.size() != n || problem.upper.size() != n) {
        throw PreconditionViolation("lp_solve: bound vectors do not match the variable count");
    }
    std::vector<RowBound> rows;
    std::vector<SparseColumn> columns(n);
    for (const auto& constraint : problem.constraints) {
        double rhs = constraint.rhs;
        for (const auto& term : constraint.terms) {
            if (term.var >= n) throw PreconditionViolation("lp_solve: variable index out of range");
            if (!std::isfinite(problem.lower[term.var])) {
                throw PreconditionViolation("lp_solve: variables need finite lower bounds");
            }
            rhs -= term.coef * problem.lower[term.var];
            columns[term.var].push(rows.size(), term.coef);
        }
        rows.push_back({constraint.relation, rhs});
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(problem.lower[j])) {
            throw PreconditionViolation("lp_solve: variables need finite lower bounds");
        }
        if (problem.upper[j] < problem.lower[j]) throw LpInfeasible();
        if (std::isfinite(problem.upper[j])) {
            columns[j].push(rows.size(), 1.0);
            rows.push_back({Relation::LessEqual, problem.upper[j] - problem.lower[j]});
        }
    }
    ExplicitColumns source(problem.objective, std::move(columns));
    LpSolution solution = solve_columns(source, rows, problem.sense, options);
    solution.optimum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        solution.x[j] += problem.lower[j];
        solution.optimum += problem.objective[j] * solution.x[j];
    }
    return solution;
}

} // namespace cfmdp
