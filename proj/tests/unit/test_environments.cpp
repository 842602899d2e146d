#include "cfmdp/environments.hpp"
#include "cfmdp/errors.hpp"
#include "cfmdp/interval_vi.hpp"

#include "doctest.h"

#include <cmath>

using namespace cfmdp;

TEST_CASE("toy model") {
    const Mdp m = build_toy_mdp();
    CHECK(m.num_states == 3);
    CHECK(m.num_actions == 1);
    CHECK(m.p(0, 0, 1) == 0.4);
    CHECK(m.p(2, 0, 2) == 1.0);
    CHECK(validate_mdp(m).empty());
}

TEST_CASE("gridworld dynamics") {
    GridSpec spec;
    SUBCASE("p = 1 is deterministic") {
        spec.p_intended = 1.0;
        const Mdp m = build_gridworld(spec);
        CHECK(validate_mdp(m).empty());
        for (double p : m.transition) CHECK((p == 0.0 || p == 1.0));
        CHECK(m.p(grid_state(spec, {0, 0}), Right, grid_state(spec, {0, 1})) == 1.0);
        CHECK(m.p(grid_state(spec, {0, 0}), Up, grid_state(spec, {0, 0})) == 1.0);
    }
    SUBCASE("p = 0.4 splits the rest evenly") {
        spec.p_intended = 0.4;
        const Mdp m = build_gridworld(spec);
        const State s = grid_state(spec, {2, 1});
        CHECK(m.p(s, Up, grid_state(spec, {1, 1})) == doctest::Approx(0.4));
        CHECK(m.p(s, Up, grid_state(spec, {3, 1})) == doctest::Approx(0.2));
        CHECK(m.p(s, Up, grid_state(spec, {2, 0})) == doctest::Approx(0.2));
        CHECK(m.p(s, Up, grid_state(spec, {2, 2})) == doctest::Approx(0.2));
        // Corner: Up and Left are blocked and stay put.
        const State c = grid_state(spec, {0, 0});
        CHECK(m.p(c, Up, c) == doctest::Approx(0.4 + 0.2));
    }
    SUBCASE("rewards, absorption and the terminal") {
        const Mdp m = build_gridworld(spec);
        const State danger = grid_state(spec, {1, 1});
        const State goal = grid_state(spec, spec.goal);
        const State term = terminal_state(spec);
        CHECK(m.r(danger, Left) == -100.0);
        CHECK(m.r(goal, Left) == 100.0);
        CHECK(m.r(grid_state(spec, {0, 0}), Up) == 0.0);
        CHECK(m.r(grid_state(spec, {3, 2}), Up) == 5.0);
        CHECK(m.p(danger, Down, term) == 1.0);
        CHECK(m.p(goal, Down, term) == 1.0);
        CHECK(is_absorbing_terminal(m, term));
        CHECK(m.initial_dist[grid_state(spec, spec.start)] == 1.0);

        // Walking into the danger cell earns -100 on the next step.
        const ObservedPath path{{grid_state(spec, {0, 1}), danger, term}, {Down, Down}};
        require_valid_path(m, path);
        CHECK(m.r(path.states[1], path.actions[1]) == -100.0);
    }
}

TEST_CASE("shortest path reaches the goal when p = 1") {
    GridSpec spec;
    spec.p_intended = 1.0;
    spec.danger_cells.clear();
    const Mdp m = build_gridworld(spec);
    PolicySchedule policy(6, m.num_states);
    for (std::size_t t = 0; t < 6; ++t) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) policy.at(t, grid_state(spec, {r, c})) = r < 3 ? Down : Right;
        }
    }
    const auto path = sample_path(m, policy, 6, 0);
    CHECK(path.states.back() == grid_state(spec, spec.goal));
}

TEST_CASE("frozen lake") {
    const Mdp m = build_frozen_lake();
    const GridSpec spec = frozen_lake_spec();
    CHECK(validate_mdp(m).empty());
    for (Cell hole : spec.hole_cells) {
        for (Action a = 0; a < 4; ++a) CHECK(m.p(grid_state(spec, hole), a, terminal_state(spec)) == 1.0);
    }
    const State s = grid_state(spec, {2, 1});
    CHECK(m.p(s, Down, grid_state(spec, {3, 1})) == doctest::Approx(1.0 / 3));
    CHECK(m.p(s, Down, grid_state(spec, {2, 0})) == doctest::Approx(1.0 / 3));
    CHECK(m.p(s, Down, grid_state(spec, {2, 2})) == doctest::Approx(1.0 / 3));
    CHECK(m.p(s, Down, grid_state(spec, {1, 1})) == 0.0);

    const std::size_t H = 10;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto path = sample_path(m, random_policy(m.num_states, 4, H, seed), H, seed + 1);
        const auto icf = build_interval_cfmdp(m, path, AssumptionSet::CsAndMonotonicity);
        const double v = robust_value_iteration(icf, ValueMode::Pessimistic).values.at(0, path.states[0]);
        CHECK(std::isfinite(v));
        CHECK(v >= -100.0 * H);
    }
}

TEST_CASE("grid spec validation") {
    GridSpec spec;
    spec.p_intended = 1.5;
    CHECK_THROWS_AS(build_gridworld(spec), InvalidInput);
    spec = GridSpec{};
    spec.goal = {4, 0};
    CHECK_THROWS_AS(build_gridworld(spec), InvalidInput);
}
