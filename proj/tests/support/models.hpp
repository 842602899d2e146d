#pragma once

// Random models and brute-force oracles shared by the unit and acceptance tests.

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/mdp.hpp"
#include "cfmdp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace cfmdp::testing {

/// Row with a random support of random size and Dirichlet(1) weights on it.
inline std::vector<double> random_row(Rng& rng, std::size_t n, std::size_t min_support = 1) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
    const std::size_t support = min_support + uniform_index(rng, n - min_support + 1);
    const auto w = dirichlet(rng, support);
    std::vector<double> row(n, 0.0);
    for (std::size_t k = 0; k < support; ++k) row[idx[k]] = w[k];
    return row;
}

/// Random MDP whose rows have random supports, so that disjoint, overlapping and
/// counterfactual-stability cases all occur.
inline Mdp random_mdp(std::size_t S, std::size_t A, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    Mdp m(S, A);
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            const auto row = random_row(rng, S);
            std::copy(row.begin(), row.end(), m.row(s, a).begin());
            m.r(s, a) = uniform(rng, -1.0, 1.0);
        }
    }
    m.initial_dist = dirichlet(rng, S);
    return m;
}

/// A positive-probability transition of a random pair.
inline ObservedTransition random_observation(const Mdp& m, Rng& rng) {
    const State s = uniform_index(rng, m.num_states);
    const Action a = uniform_index(rng, m.num_actions);
    return {s, a, sample_categorical(rng, m.row(s, a))};
}

/// min / max of sum p v over the box-constrained simplex, by enumerating its
/// vertices: all coordinates but one at a bound, the free one taking the rest.
inline std::pair<double, double> vertex_extremes(const std::vector<double>& v,
                                                 const std::vector<ProbInterval>& box) {
    const std::size_t n = v.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t free = 0; free < n; ++free) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            if (mask & (std::size_t{1} << free)) continue;
            std::vector<double> p(n);
            double used = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == free) continue;
                p[i] = (mask >> i) & 1 ? box[i].ub : box[i].lb;
                used += p[i];
            }
            p[free] = 1.0 - used;
            if (p[free] < box[free].lb - 1e-12 || p[free] > box[free].ub + 1e-12) continue;
            double value = 0.0;
            for (std::size_t i = 0; i < n; ++i) value += p[i] * v[i];
            lo = std::min(lo, value);
            hi = std::max(hi, value);
        }
    }
    return {lo, hi};
}

/// Box row [lb, ub] around a random distribution, clipped to [0, 1].
inline std::vector<ProbInterval> random_box(Rng& rng, std::size_t n) {
    const auto p = random_row(rng, n);
    std::vector<ProbInterval> box(n);
    for (std::size_t i = 0; i < n; ++i) {
        box[i].lb = std::max(0.0, p[i] - uniform(rng, 0.0, 0.3));
        box[i].ub = std::min(1.0, p[i] + uniform(rng, 0.0, 0.3));
    }
    return box;
}

/// Random interval CFMDP built from a random path of a random MDP.
inline IntervalCfMdp random_icfmdp(std::size_t S, std::size_t A, std::size_t horizon,
                                   AssumptionSet assumptions, std::uint64_t seed) {
    const Mdp m = random_mdp(S, A, seed);
    const auto policy = random_policy(S, A, horizon, seed + 1);
    const auto path = sample_path(m, policy, horizon, seed + 2);
    return build_interval_cfmdp(m, path, assumptions);
}

} // namespace cfmdp::testing
