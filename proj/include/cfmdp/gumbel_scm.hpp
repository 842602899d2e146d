#pragma once

#include "cfmdp/interval_vi.hpp"
#include "cfmdp/mdp.hpp"
#include "cfmdp/random.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace cfmdp {

/// Posterior Gumbel noise for one observed transition.
struct GumbelPosteriorSample {
    std::vector<double> noise; // G'_s per state
    ObservedTransition observed_key;
};

/**
 * Top-down posterior draw given that `observed` won the Gumbel-max race over
 * `row`. States outside the row's support keep prior standard Gumbel noise.
 */
std::vector<double> gumbel_posterior_noise(std::span<const double> row, State observed, Rng& rng);

GumbelPosteriorSample gumbel_posterior_sample(const Mdp& m, ObservedTransition obs,
                                              std::uint64_t seed);

/// argmax_s { log row[s] + noise[s] } over the support of row; ties to the lowest index.
State gumbel_argmax(std::span<const double> row, std::span<const double> noise);

/// Monte-Carlo counterfactual distribution of the query pair; counts / num_samples.
std::vector<double> gumbel_cf_probs(const Mdp& m, ObservedTransition obs, StateAction query,
                                    std::size_t num_samples, std::uint64_t seed);

struct GumbelCfMdp {
    TransitionSchedule transition;
    std::size_t num_samples = 0;
    std::uint64_t seed = 0;
};

/// gumbel_cf_probs for every (t, s, a), each row with its own derived seed.
GumbelCfMdp build_gumbel_cfmdp(const Mdp& m, const ObservedPath& path, std::size_t num_samples,
                               std::uint64_t seed);

/// Finite-horizon optimal policy on the point counterfactual model.
FiniteHorizonSolution gumbel_policy(const Mdp& m, const GumbelCfMdp& cf);

} // namespace cfmdp
