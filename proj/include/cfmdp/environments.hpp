#pragma once

#include "cfmdp/mdp.hpp"

#include <vector>

namespace cfmdp {

struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Slip {
    AllDirections, ///< the missing mass is split over the three other moves
    Perpendicular  ///< the missing mass is split over the two perpendicular moves
};

/// Grid actions, in index order.
enum GridAction : Action { Up = 0, Down = 1, Left = 2, Right = 3 };

struct GridSpec {
    int width = 4;
    int height = 4;
    Cell start{0, 0};
    Cell goal{3, 3};
    std::vector<Cell> danger_cells{{1, 1}};
    std::vector<Cell> hole_cells;
    double p_intended = 0.9;
    double goal_reward = 100.0;
    double danger_reward = -100.0;
    Slip slip = Slip::AllDirections;
};

/// Throws InvalidInput describing the first problem.
void validate_grid_spec(const GridSpec& spec);

/// Three-state, one-action model with rows (0.3,0.4,0.3), (0.4,0,0.6), (0,0,1).
Mdp build_toy_mdp();

/**
 * Cells are states row * width + col; one extra absorbing terminal state comes
 * last. Goal, danger and hole cells move to the terminal with probability 1.
 * Rewards: (width + height - 2) - manhattan(cell, goal) per step, goal_reward on
 * the goal, danger_reward on danger and hole cells, 0 on the terminal.
 */
Mdp build_gridworld(const GridSpec& spec);

/// 4x4 lake, holes at (1,1) (1,3) (2,3) (3,0), 1/3 intended and 1/3 per perpendicular move.
GridSpec frozen_lake_spec();
Mdp build_frozen_lake();

std::size_t grid_state(const GridSpec& spec, Cell c);
std::size_t terminal_state(const GridSpec& spec);

} // namespace cfmdp
