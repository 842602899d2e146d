#include "cfmdp/serialization.hpp"

#include "cfmdp/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace cfmdp {

namespace {

template <class T> T get_field(const Json& j, const char* key) {
    if (!j.contains(key)) throw InvalidInput(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("field '") + key + "': " + e.what());
    }
}

Json mdp_layer(const Mdp& base, std::span<const double> probs) {
    Mdp layer = base;
    std::copy(probs.begin(), probs.end(), layer.transition.begin());
    return mdp_to_json(layer);
}

Json cell_to_json(Cell c) { return Json::array({c.row, c.col}); }

Cell cell_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw InvalidInput("a cell is written as [row, col]");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<Cell> cells_from_json(const Json& j) {
    std::vector<Cell> out;
    for (const auto& c : j) out.push_back(cell_from_json(c));
    return out;
}

} // namespace

Json mdp_to_json(const Mdp& m) {
    Json transition = Json::array();
    Json reward = Json::array();
    for (State s = 0; s < m.num_states; ++s) {
        Json per_action = Json::array();
        Json r = Json::array();
        for (Action a = 0; a < m.num_actions; ++a) {
            const auto row = m.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
            r.push_back(m.r(s, a));
        }
        transition.push_back(std::move(per_action));
        reward.push_back(std::move(r));
    }
    Json j{{"num_states", m.num_states},
           {"num_actions", m.num_actions},
           {"transition", std::move(transition)},
           {"reward", std::move(reward)},
           {"initial_dist", m.initial_dist}};
    if (!m.state_labels.empty()) j["state_labels"] = m.state_labels;
    return j;
}

Mdp mdp_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("MDP JSON must be an object");
    const auto S = get_field<std::size_t>(j, "num_states");
    const auto A = get_field<std::size_t>(j, "num_actions");
    const auto transition = get_field<std::vector<std::vector<std::vector<double>>>>(j, "transition");
    const auto reward = get_field<std::vector<std::vector<double>>>(j, "reward");
    Mdp m(S, A);
    m.initial_dist = get_field<std::vector<double>>(j, "initial_dist");
    if (j.contains("state_labels")) m.state_labels = get_field<std::vector<std::string>>(j, "state_labels");
    if (transition.size() != S || reward.size() != S) {
        throw InvalidInput("transition/reward must have num_states entries");
    }
    for (State s = 0; s < S; ++s) {
        if (transition[s].size() != A || reward[s].size() != A) {
            throw InvalidInput("state " + std::to_string(s) + " must list num_actions rows");
        }
        for (Action a = 0; a < A; ++a) {
            if (transition[s][a].size() != S) {
                throw InvalidInput("transition row (" + std::to_string(s) + "," +
                                   std::to_string(a) + ") must have num_states entries");
            }
            std::copy(transition[s][a].begin(), transition[s][a].end(), m.row(s, a).begin());
            m.r(s, a) = reward[s][a];
        }
    }
    require_valid(m);
    // Absorb decimal rounding so downstream sums are 1 to machine precision.
    for (State s = 0; s < S; ++s) {
        for (Action a = 0; a < A; ++a) {
            auto row = m.row(s, a);
            double total = 0.0;
            for (double p : row) total += p;
            for (double& p : row) p /= total;
        }
    }
    return m;
}

Json path_to_json(const ObservedPath& path) {
    return Json{{"states", path.states}, {"actions", path.actions}};
}

ObservedPath path_from_json(const Json& j) {
    ObservedPath path;
    path.states = get_field<std::vector<State>>(j, "states");
    path.actions = get_field<std::vector<Action>>(j, "actions");
    if (path.states.size() != path.actions.size() + 1) {
        throw InvalidInput("path must have exactly one more state than actions");
    }
    return path;
}

Json icfmdp_to_json(const IntervalCfMdp& icf) {
    Json intervals = Json::array();
    for (std::size_t t = 0; t < icf.horizon; ++t) {
        Json per_state = Json::array();
        for (State s = 0; s < icf.num_states; ++s) {
            Json per_action = Json::array();
            for (Action a = 0; a < icf.num_actions; ++a) {
                Json row = Json::array();
                for (const auto& iv : icf.row(t, s, a)) row.push_back({{"lb", iv.lb}, {"ub", iv.ub}});
                per_action.push_back(std::move(row));
            }
            per_state.push_back(std::move(per_action));
        }
        intervals.push_back(std::move(per_state));
    }
    return Json{{"horizon", icf.horizon},
                {"assumptions", std::string(to_string(icf.assumptions))},
                {"path", path_to_json(icf.path)},
                {"intervals", std::move(intervals)}};
}

void write_icfmdp_csv(std::ostream& out, const IntervalCfMdp& icf) {
    out << "t,s,a,s_next,lb,ub\n" << std::setprecision(17);
    for (std::size_t t = 0; t < icf.horizon; ++t) {
        for (State s = 0; s < icf.num_states; ++s) {
            for (Action a = 0; a < icf.num_actions; ++a) {
                for (State next = 0; next < icf.num_states; ++next) {
                    const auto& iv = icf.at(t, s, a, next);
                    out << t << ',' << s << ',' << a << ',' << next << ',' << iv.lb << ',' << iv.ub
                        << '\n';
                }
            }
        }
    }
}

Json policy_to_json(const PolicySchedule& policy) {
    Json out = Json::array();
    for (std::size_t t = 0; t < policy.horizon; ++t) {
        out.push_back(std::vector<Action>(policy.actions.begin() + t * policy.num_states,
                                          policy.actions.begin() + (t + 1) * policy.num_states));
    }
    return out;
}

Json values_to_json(const ValueTable& values) {
    Json out = Json::array();
    for (std::size_t t = 0; t <= values.horizon; ++t) {
        const auto layer = values.layer(t);
        out.push_back(std::vector<double>(layer.begin(), layer.end()));
    }
    return out;
}

Json solution_to_json(const RobustSolution& solution) {
    return Json{{"mode", std::string(to_string(solution.mode))},
                {"values", values_to_json(solution.values)},
                {"policy", policy_to_json(solution.policy)}};
}

Json solution_to_json(const FiniteHorizonSolution& solution, std::string_view mode) {
    return Json{{"mode", std::string(mode)},
                {"values", values_to_json(solution.values)},
                {"policy", policy_to_json(solution.policy)}};
}

Json schedule_to_json(const Mdp& base, const TransitionSchedule& schedule) {
    Json layers = Json::array();
    const std::size_t layer_size = schedule.num_states * schedule.num_actions * schedule.num_states;
    for (std::size_t t = 0; t < schedule.horizon; ++t) {
        layers.push_back(mdp_layer(base, {schedule.probs.data() + t * layer_size, layer_size}));
    }
    return Json{{"horizon", schedule.horizon}, {"layers", std::move(layers)}};
}

Json sampled_to_json(const Mdp& base, const SampledCfMdp& sampled) {
    Json j = schedule_to_json(base, sampled.transition);
    j["seed"] = sampled.seed;
    return j;
}

Json gumbel_to_json(const Mdp& base, const GumbelCfMdp& cf) {
    Json j = schedule_to_json(base, cf.transition);
    j["num_samples"] = cf.num_samples;
    j["seed"] = cf.seed;
    return j;
}

Json grid_spec_to_json(const GridSpec& spec) {
    Json danger = Json::array();
    Json holes = Json::array();
    for (Cell c : spec.danger_cells) danger.push_back(cell_to_json(c));
    for (Cell c : spec.hole_cells) holes.push_back(cell_to_json(c));
    return Json{{"width", spec.width},
                {"height", spec.height},
                {"start", cell_to_json(spec.start)},
                {"goal", cell_to_json(spec.goal)},
                {"danger_cells", std::move(danger)},
                {"hole_cells", std::move(holes)},
                {"p_intended", spec.p_intended},
                {"goal_reward", spec.goal_reward},
                {"danger_reward", spec.danger_reward},
                {"slip", spec.slip == Slip::AllDirections ? "all" : "perpendicular"}};
}

GridSpec grid_spec_from_json(const Json& j) {
    GridSpec spec;
    try {
        if (j.contains("width")) spec.width = j.at("width").get<int>();
        if (j.contains("height")) spec.height = j.at("height").get<int>();
        if (j.contains("start")) spec.start = cell_from_json(j.at("start"));
        if (j.contains("goal")) spec.goal = cell_from_json(j.at("goal"));
        if (j.contains("danger_cells")) spec.danger_cells = cells_from_json(j.at("danger_cells"));
        if (j.contains("hole_cells")) spec.hole_cells = cells_from_json(j.at("hole_cells"));
        if (j.contains("p_intended")) spec.p_intended = j.at("p_intended").get<double>();
        if (j.contains("p")) spec.p_intended = j.at("p").get<double>();
        if (j.contains("goal_reward")) spec.goal_reward = j.at("goal_reward").get<double>();
        if (j.contains("danger_reward")) spec.danger_reward = j.at("danger_reward").get<double>();
        if (j.contains("slip")) {
            const auto slip = j.at("slip").get<std::string>();
            if (slip == "all") {
                spec.slip = Slip::AllDirections;
            } else if (slip == "perpendicular") {
                spec.slip = Slip::Perpendicular;
            } else {
                throw InvalidInput("slip must be 'all' or 'perpendicular'");
            }
        }
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("grid spec: ") + e.what());
    }
    validate_grid_spec(spec);
    return spec;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace cfmdp
