#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace cfmdp {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, GreaterEqual, Equal };

struct LinearTerm {
    std::size_t var = 0;
    double coef = 0.0;
};

struct LinearConstraint {
    std::vector<LinearTerm> terms;
    Relation relation = Relation::Equal;
    double rhs = 0.0;
};

/// Explicit linear program. Variables default to the bounds [0, +inf).
struct LpProblem {
    Sense sense = Sense::Minimize;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<LinearConstraint> constraints;

    explicit LpProblem(std::size_t num_variables, Sense sense = Sense::Minimize);

    std::size_t num_variables() const { return objective.size(); }
    void add_constraint(std::vector<LinearTerm> terms, Relation relation, double rhs);
};

struct LpSolution {
    double optimum = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-11;
    double optimality_tolerance = 1e-11;
    double feasibility_tolerance = 1e-9;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    std::size_t degenerate_streak = 25;
    std::size_t refactor_interval = 64;
    std::size_t max_iterations = 200000;
};

/// Solves an explicit LP. Throws LpInfeasible / LpUnbounded; variables must have
/// finite lower bounds.
LpSolution lp_solve(const LpProblem& problem, const SimplexOptions& options = {});

// ---------------------------------------------------------------------------
// Column-oriented interface. The simplex engine only ever asks for single
// columns and for pricing, so very wide problems can describe their columns
// implicitly.

struct SparseColumn {
    std::vector<std::size_t> rows;
    std::vector<double> values;

    void clear() {
        rows.clear();
        values.clear();
    }
    void push(std::size_t row, double value) {
        rows.push_back(row);
        values.push_back(value);
    }
};

struct RowBound {
    Relation relation = Relation::Equal;
    double rhs = 0.0;
};

struct PricedColumn {
    std::size_t column = 0;
    double reduced_cost = std::numeric_limits<double>::infinity();
};

class ColumnSource {
public:
    virtual ~ColumnSource() = default;

    virtual std::size_t num_columns() const = 0;
    virtual double cost(std::size_t j) const = 0;
    virtual void column(std::size_t j, SparseColumn& out) const = 0;

    /// Column minimising cost_scale * c_j - duals . a_j. The default scans every column.
    virtual PricedColumn price_best(std::span<const double> duals, double cost_scale) const;

    /// Lowest-index column whose reduced cost is below -tol (Bland's rule).
    virtual std::optional<std::size_t> price_first(std::span<const double> duals,
                                                   double cost_scale, double tol) const;

    /// Any column with |weights . a_j| > tol.
    virtual std::optional<std::size_t> find_nonzero(std::span<const double> weights,
                                                    double tol) const;

protected:
    double dot(std::span<const double> weights, std::size_t j, SparseColumn& scratch) const;
};

/// Revised simplex over x >= 0 with the given rows. Returns the structural solution
/// (x.size() == columns.num_columns()) and the optimum of sum_j c_j x_j.
LpSolution solve_columns(const ColumnSource& columns, std::span<const RowBound> rows, Sense sense,
                         const SimplexOptions& options = {});

} // namespace cfmdp
