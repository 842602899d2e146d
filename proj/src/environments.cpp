#include "cfmdp/environments.hpp"

#include "cfmdp/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace cfmdp {

namespace {

bool in_grid(const GridSpec& spec, Cell c) {
    return c.row >= 0 && c.row < spec.height && c.col >= 0 && c.col < spec.width;
}

bool contains(const std::vector<Cell>& cells, Cell c) {
    return std::find(cells.begin(), cells.end(), c) != cells.end();
}

Cell move(const GridSpec& spec, Cell c, Action a) {
    static constexpr int dr[] = {-1, 1, 0, 0};
    static constexpr int dc[] = {0, 0, -1, 1};
    const Cell next{c.row + dr[a], c.col + dc[a]};
    return in_grid(spec, next) ? next : c;
}

bool perpendicular(Action a, Action b) { return (a < 2) != (b < 2); }

std::string cell_text(Cell c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

} // namespace

void validate_grid_spec(const GridSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw InvalidInput("grid dimensions must be positive");
    if (!(spec.p_intended >= 0.0 && spec.p_intended <= 1.0)) {
        throw InvalidInput("p_intended must lie in [0, 1]");
    }
    auto check = [&](Cell c, const char* what) {
        if (!in_grid(spec, c)) throw InvalidInput(std::string(what) + " " + cell_text(c) + " is off the grid");
    };
    check(spec.start, "start");
    check(spec.goal, "goal");
    for (Cell c : spec.danger_cells) check(c, "danger cell");
    for (Cell c : spec.hole_cells) check(c, "hole cell");
}

std::size_t grid_state(const GridSpec& spec, Cell c) {
    return static_cast<std::size_t>(c.row * spec.width + c.col);
}

std::size_t terminal_state(const GridSpec& spec) {
    return static_cast<std::size_t>(spec.width * spec.height);
}

Mdp build_toy_mdp() {
    Mdp m(3, 1);
    const double rows[3][3] = {{0.3, 0.4, 0.3}, {0.4, 0.0, 0.6}, {0.0, 0.0, 1.0}};
    for (State s = 0; s < 3; ++s) {
        for (State next = 0; next < 3; ++next) m.p(s, 0, next) = rows[s][next];
    }
    m.state_labels = {"s0", "s1", "s2"};
    require_valid(m);
    return m;
}

Mdp build_gridworld(const GridSpec& spec) {
    validate_grid_spec(spec);
    const std::size_t cells = terminal_state(spec);
    const State terminal = cells;
    Mdp m(cells + 1, 4);
    const int d_max = spec.width + spec.height - 2;

    for (int row = 0; row < spec.height; ++row) {
        for (int col = 0; col < spec.width; ++col) {
            const Cell c{row, col};
            const State s = grid_state(spec, c);
            double reward =
                d_max - (std::abs(row - spec.goal.row) + std::abs(col - spec.goal.col));
            bool absorbing = false;
            if (c == spec.goal) {
                reward = spec.goal_reward;
                absorbing = true;
            } else if (contains(spec.danger_cells, c) || contains(spec.hole_cells, c)) {
                reward = spec.danger_reward;
                absorbing = true;
            }
            for (Action a = 0; a < 4; ++a) {
                m.r(s, a) = reward;
                if (absorbing) {
                    m.p(s, a, terminal) = 1.0;
                    continue;
                }
                for (Action dir = 0; dir < 4; ++dir) {
                    double p = 0.0;
                    if (dir == a) {
                        p = spec.p_intended;
                    } else if (spec.slip == Slip::AllDirections) {
                        p = (1.0 - spec.p_intended) / 3.0;
                    } else if (perpendicular(a, dir)) {
                        p = (1.0 - spec.p_intended) / 2.0;
                    }
                    if (p > 0.0) m.p(s, a, grid_state(spec, move(spec, c, dir))) += p;
                }
            }
        }
    }
    for (Action a = 0; a < 4; ++a) m.p(terminal, a, terminal) = 1.0;

    std::fill(m.initial_dist.begin(), m.initial_dist.end(), 0.0);
    m.initial_dist[grid_state(spec, spec.start)] = 1.0;
    m.state_labels.clear();
    for (int row = 0; row < spec.height; ++row) {
        for (int col = 0; col < spec.width; ++col) m.state_labels.push_back(cell_text({row, col}));
    }
    m.state_labels.emplace_back("terminal");
    require_valid(m);
    return m;
}

GridSpec frozen_lake_spec() {
    GridSpec spec;
    spec.danger_cells.clear();
    spec.hole_cells = {{1, 1}, {1, 3}, {2, 3}, {3, 0}};
    spec.p_intended = 1.0 / 3.0;
    spec.slip = Slip::Perpendicular;
    return spec;
}

Mdp build_frozen_lake() { return build_gridworld(frozen_lake_spec()); }

} // namespace cfmdp
