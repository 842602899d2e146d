#pragma once

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/environments.hpp"
#include "cfmdp/mdp.hpp"
#include "cfmdp/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cfmdp {

struct RunConfig {
    std::string env = "gridworld"; // toy | gridworld | frozen_lake
    GridSpec grid;                 // used by gridworld
    AssumptionSet assumptions = AssumptionSet::CsAndMonotonicity;
    std::size_t num_paths = 20;
    std::size_t horizon = 10;
    std::size_t num_cf_samples = 20; // sampled CFMDPs per path (traces)
    std::size_t rollouts = 1000;     // rollouts per sampled CFMDP (traces)
    std::size_t gumbel_samples = 1000;
    std::uint64_t seed = 0;
    std::string output_dir = "results";
    std::size_t threads = 1;
};

/// Throws InvalidInput on unknown env names or zero counts.
void validate_config(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& cfg);

Mdp build_environment(const RunConfig& cfg);

using Metrics = std::vector<std::pair<std::string, double>>;

struct ExperimentRecord {
    std::string experiment;
    std::size_t trial = 0;
    std::uint64_t path_seed = 0;
    Metrics metrics; // names and order fixed per experiment
};

struct ExperimentReport {
    std::string experiment;
    std::vector<ExperimentRecord> records;
    Metrics summary;

    double summary_value(const std::string& name) const;
};

/// Seed of trial i's observed path, and that path: uniformly random actions for
/// cfg.horizon steps.
std::uint64_t trial_seed(const RunConfig& cfg, std::size_t trial);
ObservedPath behavioural_path(const Mdp& m, const RunConfig& cfg, std::size_t trial);

/// Counterfactual bounds on the nominal-optimal policy's return from random-policy paths.
ExperimentReport run_ope(const RunConfig& cfg);

/// Worst-case value of the robust policy vs the Gumbel-max policy on each path's ICFMDP.
ExperimentReport run_robustness(const RunConfig& cfg);

/// Mean interval width per assumption set. Intervals with ub = 0 are skipped, as are
/// steps observed from an absorbing zero-reward terminal.
ExperimentReport run_bound_stats(const RunConfig& cfg);

struct WidthTriple {
    std::size_t trial, t;
    State s;
    Action a;
    State next;
    double none, cs, cs_mon;
};

/// Every (t, s, a, s') width under the three assumption sets for trial `trial`.
std::vector<WidthTriple> bound_width_triples(const Mdp& m, const RunConfig& cfg, std::size_t trial);

/// Wall-clock of ICFMDP vs Gumbel CFMDP generation on the same paths.
ExperimentReport run_timing(const RunConfig& cfg);

/// Per-step reward statistics of both policies over CFMDPs sampled from the ICFMDP.
ExperimentReport run_cf_traces(const RunConfig& cfg);

/// Columns: run_id, experiment, trial, path_seed, then the metric names. The
/// header is written only when the file is new.
void write_report_csv(const std::filesystem::path& file, const ExperimentReport& report,
                      const std::string& run_id);

Json report_summary_json(const ExperimentReport& report, const RunConfig& cfg,
                         const std::string& run_id);

std::string make_run_id(std::uint64_t seed);

} // namespace cfmdp
