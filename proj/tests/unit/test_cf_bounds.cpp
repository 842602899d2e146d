#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/coupling_oracle.hpp"
#include "cfmdp/environments.hpp"
#include "cfmdp/errors.hpp"

#include "../support/models.hpp"
#include "doctest.h"

using namespace cfmdp;

namespace {

const ObservedTransition kToyObs{0, 0, 1};

Mdp from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t S = rows.front().size();
    Mdp m(S, 1);
    for (State s = 0; s < rows.size(); ++s) {
        for (State j = 0; j < S; ++j) m.p(s, 0, j) = rows[s][j];
    }
    for (State s = rows.size(); s < S; ++s) m.p(s, 0, s) = 1.0;
    return m;
}

} // namespace

TEST_CASE("classify_support") {
    const Mdp toy = build_toy_mdp();
    CHECK(classify_support(toy, {0, 0}, {0, 0}) == SupportRelation::ObservedPair);
    CHECK(classify_support(toy, {0, 0}, {1, 0}) == SupportRelation::Overlapping);
    const Mdp split = from_rows({{1, 0}, {0, 1}});
    CHECK(classify_support(split, {0, 0}, {1, 0}) == SupportRelation::Disjoint);
}

TEST_CASE("cs_condition") {
    const Mdp toy = build_toy_mdp();
    CHECK_FALSE(cs_condition(toy, kToyObs, {1, 0}, 0));
    // Guard clause: P(2 | s_t, a_t) = 0, so the ratio test never runs.
    const Mdp guard = from_rows({{0.5, 0.5, 0.0}, {0.9, 0.0, 0.1}});
    CHECK_FALSE(cs_condition(guard, {0, 0, 0}, {1, 0}, 2));

    // Ratios 0.6/0.4 = 1.5 > 0.1/0.5 = 0.2.
    const Mdp fires = from_rows({{0.4, 0.5, 0.1}, {0.6, 0.1, 0.3}});
    CHECK(cs_condition(fires, {0, 0, 0}, {1, 0}, 1));
    const auto lp = oracle_bounds(fires, {0, 0, 0}, {1, 0}, 1, AssumptionSet::CsOnly);
    CHECK(lp.ub == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("observed pair is the identity coupling") {
    const Mdp toy = build_toy_mdp();
    const auto row = bounds_observed_pair(toy, kToyObs);
    CHECK(row[0] == ProbInterval{0.0, 0.0});
    CHECK(row[1] == ProbInterval{1.0, 1.0});
    CHECK(row[2] == ProbInterval{0.0, 0.0});
    for (auto as : kAllAssumptionSets) CHECK(counterfactual_row(toy, kToyObs, {0, 0}, as) == row);
}

TEST_CASE("disjoint-support bounds") {
    // Observed row puts 0.8 on state 0; the query row lives on states 2 and 3.
    const Mdp m = from_rows({{0.8, 0.2, 0.0, 0.0}, {0.0, 0.0, 0.5, 0.5}, {0.0, 0.0, 0.1, 0.9},
                             {0.0, 0.0, 1.0, 0.0}});
    const ObservedTransition obs{0, 0, 0};
    auto check_against_oracle = [&](StateAction q, State next, double lb, double ub) {
        const auto closed = bounds_disjoint(m, obs, q, next);
        CHECK(closed.lb == doctest::Approx(lb).epsilon(1e-12));
        CHECK(closed.ub == doctest::Approx(ub).epsilon(1e-12));
        const auto lp = oracle_bounds(m, obs, q, next, AssumptionSet::CsAndMonotonicity);
        CHECK(lp.lb == doctest::Approx(lb).epsilon(1e-9));
        CHECK(lp.ub == doctest::Approx(ub).epsilon(1e-9));
    };
    check_against_oracle({1, 0}, 2, 0.375, 0.625);
    check_against_oracle({2, 0}, 2, 0.0, 0.125);
    check_against_oracle({3, 0}, 2, 1.0, 1.0);
    CHECK_THROWS_AS(bounds_disjoint(m, obs, {0, 0}, 0), PreconditionViolation);
    const Mdp toy = build_toy_mdp();
    CHECK_THROWS_AS(bounds_disjoint(toy, kToyObs, {1, 0}, 0), PreconditionViolation);
}

TEST_CASE("overlapping-support bounds reproduce the toy example") {
    const Mdp toy = build_toy_mdp();
    CHECK(bounds_overlapping_ub(toy, kToyObs, {1, 0}, 0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(bounds_overlapping_ub(toy, kToyObs, {1, 0}, 1) == 0.0);
    CHECK(bounds_overlapping_ub(toy, kToyObs, {2, 0}, 2) == 1.0);

    std::vector<double> ub(3);
    for (State j = 0; j < 3; ++j) ub[j] = bounds_overlapping_ub(toy, kToyObs, {1, 0}, j);
    CHECK(bounds_overlapping_lb(toy, kToyObs, {1, 0}, 0, ub) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(bounds_overlapping_lb(toy, kToyObs, {1, 0}, 2, ub) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(bounds_overlapping_lb(toy, kToyObs, {1, 0}, 1, ub) == 0.0);
}

TEST_CASE("no-assumption and CS-only bounds") {
    const Mdp toy = build_toy_mdp();
    CHECK(bounds_no_assumption(toy, kToyObs, {1, 0}, 0) == ProbInterval{0.0, 1.0});
    CHECK(bounds_no_assumption(toy, kToyObs, {2, 0}, 2).lb == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bounds_no_assumption(toy, kToyObs, {2, 0}, 2).ub == 1.0);
    CHECK(bounds_no_assumption(toy, kToyObs, {1, 0}, 1) == ProbInterval{0.0, 0.0});
    CHECK_THROWS_AS(bounds_no_assumption(toy, kToyObs, {0, 0}, 1), PreconditionViolation);

    const auto cs_row = counterfactual_row(toy, kToyObs, {1, 0}, AssumptionSet::CsOnly);
    CHECK(cs_row[0] == ProbInterval{0.0, 1.0});
    const auto lp = oracle_bounds(toy, kToyObs, {1, 0}, 0, AssumptionSet::CsOnly);
    CHECK(lp.lb == doctest::Approx(0.0));
    CHECK(lp.ub == doctest::Approx(1.0));

    const Mdp disjoint = from_rows({{0.8, 0.2, 0.0}, {0.0, 0.0, 1.0}});
    CHECK(counterfactual_row(disjoint, {0, 0, 0}, {1, 0}, AssumptionSet::CsOnly)[2] ==
          ProbInterval{1.0, 1.0});

    const Mdp fires = from_rows({{0.4, 0.5, 0.1}, {0.6, 0.1, 0.3}});
    CHECK(counterfactual_row(fires, {0, 0, 0}, {1, 0}, AssumptionSet::CsOnly)[1] ==
          ProbInterval{0.0, 0.0});
}

TEST_CASE("build_interval_cfmdp reproduces the toy table") {
    const Mdp toy = build_toy_mdp();
    const ObservedPath path{{0, 1}, {0}};
    const double none[9][2] = {{0, 0}, {1, 1}, {0, 0}, {0, 1}, {0, 0}, {0, 1}, {0, 0}, {0, 0}, {1, 1}};
    const double mon[9][2] = {{0, 0}, {1, 1}, {0, 0}, {0.4, 0.4}, {0, 0}, {0.6, 0.6}, {0, 0}, {0, 0}, {1, 1}};
    const auto a = build_interval_cfmdp(toy, path, AssumptionSet::NoAssumptions);
    const auto b = build_interval_cfmdp(toy, path, AssumptionSet::CsAndMonotonicity);
    for (State s = 0; s < 3; ++s) {
        for (State j = 0; j < 3; ++j) {
            CHECK(std::abs(a.at(0, s, 0, j).lb - none[s * 3 + j][0]) <= 1e-12);
            CHECK(std::abs(a.at(0, s, 0, j).ub - none[s * 3 + j][1]) <= 1e-12);
            CHECK(std::abs(b.at(0, s, 0, j).lb - mon[s * 3 + j][0]) <= 1e-12);
            CHECK(std::abs(b.at(0, s, 0, j).ub - mon[s * 3 + j][1]) <= 1e-12);
        }
    }
}

TEST_CASE("deterministic model has degenerate intervals") {
    Mdp m(3, 2);
    for (State s = 0; s < 3; ++s) {
        for (Action a = 0; a < 2; ++a) m.p(s, a, (s + a + 1) % 3) = 1.0;
    }
    const auto path = sample_path(m, random_policy(3, 2, 4, 1), 4, 2);
    for (auto as : kAllAssumptionSets) {
        const auto icf = build_interval_cfmdp(m, path, as);
        for (std::size_t t = 0; t < 4; ++t) {
            for (State s = 0; s < 3; ++s) {
                for (Action a = 0; a < 2; ++a) {
                    for (State j = 0; j < 3; ++j) {
                        CHECK(icf.at(t, s, a, j).lb == m.p(s, a, j));
                        CHECK(icf.at(t, s, a, j).ub == m.p(s, a, j));
                    }
                }
            }
        }
    }
}

TEST_CASE("structural properties on random models") {
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const std::size_t S = 2 + seed % 4;
        const std::size_t A = 1 + seed % 2;
        const Mdp m = testing::random_mdp(S, A, seed);
        Rng rng = make_rng(seed + 1000);
        const auto obs = testing::random_observation(m, rng);
        const State k = obs.next;
        const auto p = m.row(obs.state, obs.action);
        for (State s = 0; s < S; ++s) {
            for (Action a = 0; a < A; ++a) {
                const StateAction q{s, a};
                const auto r = m.row(s, a);
                const auto none = counterfactual_row(m, obs, q, AssumptionSet::NoAssumptions);
                const auto cs = counterfactual_row(m, obs, q, AssumptionSet::CsOnly);
                const auto mon = counterfactual_row(m, obs, q, AssumptionSet::CsAndMonotonicity);
                const auto rel = classify_support(m, obs.pair(), q);
                double sums[3][2] = {};
                for (State j = 0; j < S; ++j) {
                    CHECK(none[j].lb <= cs[j].lb + 1e-12);
                    CHECK(cs[j].lb <= mon[j].lb + 1e-12);
                    CHECK(mon[j].ub <= cs[j].ub + 1e-12);
                    CHECK(cs[j].ub <= none[j].ub + 1e-12);
                    const ProbInterval* rows[3] = {&none[j], &cs[j], &mon[j]};
                    for (int k3 = 0; k3 < 3; ++k3) {
                        CHECK(rows[k3]->lb >= 0.0);
                        CHECK(rows[k3]->lb <= rows[k3]->ub);
                        CHECK(rows[k3]->ub <= 1.0);
                        sums[k3][0] += rows[k3]->lb;
                        sums[k3][1] += rows[k3]->ub;
                    }
                    if (rel == SupportRelation::Overlapping) {
                        if (j == k) CHECK(mon[j].lb >= r[k] - 1e-12);
                        if (j != k && p[j] > 0.0 && r[j] > 0.0) CHECK(mon[j].ub <= r[j] + 1e-12);
                    }
                    if (rel == SupportRelation::Disjoint) CHECK(mon[j] == none[j]);
                }
                for (auto& sum : sums) {
                    CHECK(sum[0] <= 1.0 + 1e-9);
                    CHECK(sum[1] >= 1.0 - 1e-9);
                }
            }
        }
    }
}

TEST_CASE("build errors name their location") {
    const Mdp toy = build_toy_mdp();
    CHECK_THROWS_AS(build_interval_cfmdp(toy, {{0, 1, 1}, {0, 0}}, AssumptionSet::CsOnly),
                    InvalidInput);
    CHECK_THROWS_AS(parse_assumptions("mon"), InvalidInput);
    CHECK(parse_assumptions("cs+mon") == AssumptionSet::CsAndMonotonicity);
    CHECK(to_string(AssumptionSet::CsOnly) == "cs");
}
