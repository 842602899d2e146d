#pragma once

#include "cfmdp/cf_bounds.hpp"
#include "cfmdp/environments.hpp"
#include "cfmdp/gumbel_scm.hpp"
#include "cfmdp/interval_vi.hpp"
#include "cfmdp/mdp.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace cfmdp {

using Json = nlohmann::json;

Json mdp_to_json(const Mdp& m);
/// Rows within 1e-9 of stochastic are re-normalized; anything else is rejected
/// with InvalidInput.
Mdp mdp_from_json(const Json& j);

Json path_to_json(const ObservedPath& path);
ObservedPath path_from_json(const Json& j);

Json icfmdp_to_json(const IntervalCfMdp& icf);
/// Flat export with header t,s,a,s_next,lb,ub.
void write_icfmdp_csv(std::ostream& out, const IntervalCfMdp& icf);

Json policy_to_json(const PolicySchedule& policy);
Json values_to_json(const ValueTable& values);
Json solution_to_json(const RobustSolution& solution);
Json solution_to_json(const FiniteHorizonSolution& solution, std::string_view mode);

/// One MDP-schema object per time layer under "layers".
Json schedule_to_json(const Mdp& base, const TransitionSchedule& schedule);
Json sampled_to_json(const Mdp& base, const SampledCfMdp& sampled);
Json gumbel_to_json(const Mdp& base, const GumbelCfMdp& cf);

Json grid_spec_to_json(const GridSpec& spec);
/// Missing keys keep the GridSpec defaults.
GridSpec grid_spec_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

} // namespace cfmdp
