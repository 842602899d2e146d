#include "cfmdp/gumbel_scm.hpp"

#include "cfmdp/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cfmdp {

namespace {

/// -log(exp(-a) + exp(-b)), i.e. a Gumbel value b truncated above at a.
double truncate_gumbel(double a, double b) {
    const double lo = std::min(a, b);
    return lo - std::log1p(std::exp(-std::abs(a - b)));
}

void check_row_state(std::span<const double> row, State observed) {
    if (observed >= row.size() || !(row[observed] > 0.0)) {
        throw PreconditionViolation("gumbel posterior: observed state has zero probability");
    }
}

/// Posterior noise with log-probabilities of the observed row precomputed.
void posterior_into(std::span<const double> row, std::span<const double> logp, State observed,
                    Rng& rng, std::vector<double>& noise) {
    double total = 0.0;
    for (double p : row) total += p;
    const double top = std::log(total) + standard_gumbel(rng);
    for (State s = 0; s < row.size(); ++s) {
        if (s == observed) {
            noise[s] = top - logp[s];
        } else if (row[s] > 0.0) {
            const double g = logp[s] + standard_gumbel(rng);
            noise[s] = truncate_gumbel(top, g) - logp[s];
        } else {
            noise[s] = standard_gumbel(rng);
        }
    }
}

std::vector<double> log_row(std::span<const double> row) {
    std::vector<double> out(row.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < row.size(); ++s) {
        if (row[s] > 0.0) out[s] = std::log(row[s]);
    }
    return out;
}

State argmax_with_logs(std::span<const double> logp, std::span<const double> noise) {
    State best = logp.size();
    double best_value = -std::numeric_limits<double>::infinity();
    for (State s = 0; s < logp.size(); ++s) {
        if (std::isinf(logp[s])) continue;
        const double v = logp[s] + noise[s];
        if (best == logp.size() || v > best_value) {
            best = s;
            best_value = v;
        }
    }
    if (best == logp.size()) throw PreconditionViolation("gumbel_argmax: row has no support");
    return best;
}

} // namespace

std::vector<double> gumbel_posterior_noise(std::span<const double> row, State observed, Rng& rng) {
    check_row_state(row, observed);
    std::vector<double> noise(row.size());
    const auto logp = log_row(row);
    posterior_into(row, logp, observed, rng, noise);
    return noise;
}

GumbelPosteriorSample gumbel_posterior_sample(const Mdp& m, ObservedTransition obs,
                                              std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return {gumbel_posterior_noise(m.row(obs.state, obs.action), obs.next, rng), obs};
}

State gumbel_argmax(std::span<const double> row, std::span<const double> noise) {
    if (row.size() != noise.size()) throw PreconditionViolation("gumbel_argmax: length mismatch");
    const auto logp = log_row(row);
    return argmax_with_logs(logp, noise);
}

std::vector<double> gumbel_cf_probs(const Mdp& m, ObservedTransition obs, StateAction query,
                                    std::size_t num_samples, std::uint64_t seed) {
    if (num_samples < 1) throw PreconditionViolation("gumbel_cf_probs: num_samples must be >= 1");
    const std::size_t S = m.num_states;
    const auto obs_row = m.row(obs.state, obs.action);
    check_row_state(obs_row, obs.next);
    std::vector<double> probs(S, 0.0);
    if (obs.pair() == query) {
        probs[obs.next] = 1.0;
        return probs;
    }
    const auto query_row = m.row(query.state, query.action);
    const auto obs_logp = log_row(obs_row);
    const auto query_logp = log_row(query_row);

    Rng rng = make_rng(seed);
    std::vector<std::size_t> counts(S, 0);
    std::vector<double> noise(S);
    for (std::size_t n = 0; n < num_samples; ++n) {
        posterior_into(obs_row, obs_logp, obs.next, rng, noise);
        ++counts[argmax_with_logs(query_logp, noise)];
    }
    for (State s = 0; s < S; ++s) {
        probs[s] = static_cast<double>(counts[s]) / static_cast<double>(num_samples);
    }
    return probs;
}

GumbelCfMdp build_gumbel_cfmdp(const Mdp& m, const ObservedPath& path, std::size_t num_samples,
                               std::uint64_t seed) {
    require_valid_path(m, path);
    GumbelCfMdp out{TransitionSchedule(path.length(), m.num_states, m.num_actions), num_samples,
                    seed};
    for (std::size_t t = 0; t < path.length(); ++t) {
        const auto obs = path.step(t);
        for (State s = 0; s < m.num_states; ++s) {
            for (Action a = 0; a < m.num_actions; ++a) {
                const auto probs =
                    gumbel_cf_probs(m, obs, {s, a}, num_samples, derive_seed(seed, {t, s, a}));
                std::copy(probs.begin(), probs.end(), out.transition.row(t, s, a).begin());
            }
        }
    }
    return out;
}

FiniteHorizonSolution gumbel_policy(const Mdp& m, const GumbelCfMdp& cf) {
    return solve_schedule(m, cf.transition);
}

} // namespace cfmdp
