#include "peakrl/core/io.hpp"

#include <fstream>
#include <sstream>

namespace peakrl::io {

namespace {

std::string where(const std::string& field) { return "field '" + field + "'"; }

const Json& field(const Json& doc, const std::string& name) {
    auto it = doc.find(name);
    if (it == doc.end()) throw ValidationError("missing " + where(name));
    return *it;
}

double number(const Json& v, const std::string& name) {
    if (!v.is_number()) throw ValidationError(where(name) + " must be a number");
    return v.get<double>();
}

std::size_t count(const Json& v, const std::string& name) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError(where(name) + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::optional<double> optional_number(const Json& doc, const std::string& name) {
    auto it = doc.find(name);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    return number(*it, name);
}

std::optional<std::size_t> optional_count(const Json& doc, const std::string& name) {
    auto it = doc.find(name);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    return count(*it, name);
}

// Reads a nested array of the given shape into a flat row-major vector.
void flatten(const Json& v, const std::vector<std::size_t>& shape, std::size_t depth, const std::string& path,
             std::vector<double>& out) {
    if (depth == shape.size()) {
        if (!v.is_number()) throw ValidationError(path + " must be a number");
        out.push_back(v.get<double>());
        return;
    }
    if (!v.is_array()) throw ValidationError(path + " must be an array");
    if (v.size() != shape[depth])
        throw ValidationError(path + " has " + std::to_string(v.size()) + " entries, expected " +
                              std::to_string(shape[depth]));
    for (std::size_t i = 0; i < v.size(); ++i)
        flatten(v[i], shape, depth + 1, path + "[" + std::to_string(i) + "]", out);
}

std::vector<double> read_array(const Json& doc, const std::string& name, const std::vector<std::size_t>& shape) {
    std::vector<double> out;
    flatten(field(doc, name), shape, 0, name, out);
    return out;
}

StateActionTable read_table(const Json& doc, const std::string& name, std::size_t S, std::size_t A) {
    StateActionTable t(S, A);
    auto flat = read_array(doc, name, {S, A});
    std::copy(flat.begin(), flat.end(), t.flat().begin());
    return t;
}

std::vector<double> read_vector(const Json& doc, const std::string& name) {
    const Json& v = field(doc, name);
    if (!v.is_array()) throw ValidationError(where(name) + " must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], name + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace

Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

MdpInstance instance_from_json(const Json& doc) {
    if (!doc.is_object()) throw ValidationError("instance document must be an object");
    MdpData d;
    d.n_states = count(field(doc, "n_states"), "n_states");
    d.n_actions = count(field(doc, "n_actions"), "n_actions");
    if (d.n_states == 0 || d.n_actions == 0) throw ValidationError("n_states and n_actions must be positive");
    d.gamma = optional_number(doc, "gamma");
    d.bound_c = number(field(doc, "bound_c"), "bound_c");
    d.kernel = read_array(doc, "kernel", {d.n_states, d.n_actions, d.n_states});
    d.reward = read_array(doc, "reward", {d.n_states, d.n_actions});
    if (auto it = doc.find("constraints"); it != doc.end()) {
        if (!it->is_array()) throw ValidationError(where("constraints") + " must be an array of tables");
        for (std::size_t j = 0; j < it->size(); ++j) {
            std::vector<double> t;
            flatten((*it)[j], {d.n_states, d.n_actions}, 0, "constraints[" + std::to_string(j) + "]", t);
            d.constraints.push_back(std::move(t));
        }
    }
    d.recurrent_state = optional_count(doc, "recurrent_state");
    d.reward_shift = optional_number(doc, "reward_shift").value_or(0.0);
    return MdpInstance::create(std::move(d));
}

Json instance_to_json(const MdpInstance& inst) {
    const std::size_t S = inst.n_states(), A = inst.n_actions();
    Json doc;
    doc["n_states"] = S;
    doc["n_actions"] = A;
    doc["gamma"] = inst.gamma() ? Json(*inst.gamma()) : Json(nullptr);
    doc["bound_c"] = inst.bound_c();
    Json kernel = Json::array();
    for (StateId s = 0; s < S; ++s) {
        Json rows = Json::array();
        for (ActionId a = 0; a < A; ++a) {
            auto row = inst.kernel_row(s, a);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        kernel.push_back(std::move(rows));
    }
    doc["kernel"] = std::move(kernel);
    doc["reward"] = table_to_json(inst.reward_table());
    Json cons = Json::array();
    for (std::size_t j = 0; j < inst.n_constraints(); ++j) {
        Json t = Json::array();
        for (StateId s = 0; s < S; ++s) {
            Json row = Json::array();
            for (ActionId a = 0; a < A; ++a) row.push_back(inst.constraint(j, s, a));
            t.push_back(std::move(row));
        }
        cons.push_back(std::move(t));
    }
    doc["constraints"] = std::move(cons);
    if (inst.recurrent_state()) doc["recurrent_state"] = *inst.recurrent_state();
    if (inst.reward_shift() != 0.0) doc["reward_shift"] = inst.reward_shift();
    return doc;
}

MdpInstance load_instance(const std::filesystem::path& path) {
    const Json doc = read_json_file(path);
    try {
        return environment_from_json(doc);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

RandomInstanceParams random_params_from_json(const Json& doc) {
    RandomInstanceParams p;
    p.n_states = optional_count(doc, "n_states").value_or(p.n_states);
    p.n_actions = optional_count(doc, "n_actions").value_or(p.n_actions);
    p.n_constraints = optional_count(doc, "n_constraints").value_or(p.n_constraints);
    if (auto it = doc.find("feasibility_mode"); it != doc.end()) p.mode = parse_feasibility_mode(it->get<std::string>());
    p.seed = doc.value("seed", std::uint64_t{0});
    p.bound_c = optional_number(doc, "bound_c").value_or(p.bound_c);
    p.gamma = optional_number(doc, "gamma");
    p.min_kernel_entry = optional_number(doc, "min_kernel_entry").value_or(p.min_kernel_entry);
    p.recurrent_state = optional_count(doc, "recurrent_state");
    p.recurrent_mass = optional_number(doc, "recurrent_mass").value_or(p.recurrent_mass);
    return p;
}

WirelessEnvSpec wireless_from_json(const Json& doc) {
    WirelessEnvSpec w;
    w.n_channel_states = count(field(doc, "n_channel_states"), "n_channel_states");
    w.n_bandwidth_actions = count(field(doc, "n_bandwidth_actions"), "n_bandwidth_actions");
    w.power = read_table(doc, "power", w.n_channel_states, w.n_bandwidth_actions);
    w.qos = read_table(doc, "qos", w.n_channel_states, w.n_bandwidth_actions);
    w.qos_floor = number(field(doc, "qos_floor"), "qos_floor");
    w.kernel = read_array(doc, "kernel", {w.n_channel_states, w.n_bandwidth_actions, w.n_channel_states});
    w.gamma = optional_number(doc, "gamma");
    w.bound_c = optional_number(doc, "bound_c");
    w.epsilon = optional_number(doc, "epsilon");
    w.recurrent_state = optional_count(doc, "recurrent_state");
    return w;
}

SearchEngineEnvSpec search_engine_from_json(const Json& doc) {
    SearchEngineEnvSpec e;
    e.n_documents = count(field(doc, "n_documents"), "n_documents");
    e.engine_values = read_vector(doc, "engine_values");
    e.user_values = read_vector(doc, "user_values");
    e.attention = read_vector(doc, "attention");
    e.qos_floor = number(field(doc, "qos_floor"), "qos_floor");
    e.gamma = optional_number(doc, "gamma");
    e.bound_c = optional_number(doc, "bound_c");
    return e;
}

MdpInstance environment_from_json(const Json& doc) {
    if (!doc.is_object()) throw ValidationError("environment document must be an object");
    const std::string type = doc.value("type", std::string("raw_mdp"));
    if (type == "raw_mdp") return instance_from_json(doc);
    if (type == "wireless") return compile_wireless(wireless_from_json(doc));
    if (type == "search_engine") return compile_search_engine(search_engine_from_json(doc));
    if (type == "random") return random_instance(random_params_from_json(doc));
    throw ValidationError("unknown environment type '" + type + "'");
}

LearnerConfig learner_config_from_json(const Json& doc, LearnerConfig c) {
    if (!doc.is_object()) throw ConfigError("learner block must be an object");
    try {
        if (auto it = doc.find("mode"); it != doc.end()) c.mode = parse_mode(it->get<std::string>());
        if (auto g = optional_number(doc, "gamma")) c.gamma = g;
        if (auto w = optional_number(doc, "omega")) c.discounted.omega = *w;
        if (auto it = doc.find("schedule"); it != doc.end()) c.average = parse_average_schedule(it->get<std::string>());
        if (auto v = optional_number(doc, "epsilon_floor")) c.exploration.epsilon_floor = *v;
        if (auto v = optional_number(doc, "epsilon_start")) c.exploration.epsilon_start = *v;
        if (auto v = optional_count(doc, "epsilon_decay_steps")) c.exploration.decay_steps = *v;
        if (auto v = optional_number(doc, "q_init")) c.q_init = *v;
        if (auto it = doc.find("f"); it != doc.end()) c.f = parse_functional(it->get<std::string>());
        if (auto v = optional_count(doc, "steps")) c.steps = *v;
        if (auto it = doc.find("seed"); it != doc.end()) c.seed = it->get<std::uint64_t>();
        if (auto v = optional_count(doc, "initial_state")) c.initial_state = *v;
        if (auto v = optional_number(doc, "tie_tolerance")) c.tie_tolerance = *v;
        if (auto it = doc.find("waive_assumptions"); it != doc.end()) c.waive_assumptions = it->get<bool>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("learner block: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("learner block: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("learner block: ") + e.what());
    }
    if (!c.waive_assumptions) c.discounted.validate();
    c.exploration.validate(c.waive_assumptions);
    return c;
}

Json learner_config_to_json(const LearnerConfig& c) {
    Json doc;
    doc["mode"] = to_string(c.mode);
    if (c.gamma) doc["gamma"] = *c.gamma;
    doc["omega"] = c.discounted.omega;
    doc["schedule"] = c.average.name();
    doc["epsilon_floor"] = c.exploration.epsilon_floor;
    doc["epsilon_start"] = c.exploration.epsilon_start;
    doc["epsilon_decay_steps"] = c.exploration.decay_steps;
    doc["q_init"] = c.q_init;
    doc["f"] = c.f.name();
    doc["steps"] = c.steps;
    doc["seed"] = c.seed;
    doc["initial_state"] = c.initial_state;
    doc["tie_tolerance"] = c.tie_tolerance;
    doc["waive_assumptions"] = c.waive_assumptions;
    return doc;
}

Json table_to_json(const StateActionTable& t) {
    Json out = Json::array();
    for (StateId s = 0; s < t.n_states(); ++s) {
        auto row = t.row(s);
        out.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

Json to_json(const PolicyCheckReport& r) {
    Json doc{{"passed", r.passed}, {"policies_checked", r.policies_checked}};
    if (r.violating_policy) doc["violating_policy"] = *r.violating_policy;
    if (!r.detail.empty()) doc["detail"] = r.detail;
    return doc;
}

Json to_json(const FeasibilityVerdict& v) {
    return Json{{"status", to_string(v.status)}, {"margin", v.margin}, {"tolerance", v.tolerance}, {"witness", v.witness}};
}

Json to_json(const AuditReport& r) {
    Json doc;
    doc["passed"] = r.passed;
    doc["mode"] = to_string(r.mode);
    doc["tolerance"] = r.tolerance;
    doc["reward_shift"] = r.reward_shift;
    doc["support_feasible"] = r.support_feasible;
    doc["policy_value_gap"] = r.policy_value_gap;
    doc["transformed_value_gap"] = r.transformed_value_gap;
    doc["constrained_optimum"] = r.constrained_optimum;
    doc["transformed_optimum"] = r.transformed_optimum;
    doc["greedy_policy"] = table_to_json(r.greedy.probs());
    std::vector<int> reach(r.reachable.begin(), r.reachable.end());
    doc["reachable"] = reach;
    doc["verdict"] = to_json(r.verdict);
    Json ce = Json::array();
    for (const auto& c : r.counterexamples)
        ce.push_back({{"kind", c.kind}, {"state", c.state}, {"action", c.action}, {"value", c.value}, {"detail", c.detail}});
    doc["counterexamples"] = std::move(ce);
    return doc;
}

Json to_json(const ScheduleReport& r) {
    return Json{{"passed", r.passed},
                {"failed_condition", r.failed_condition},
                {"reason", r.reason},
                {"max_ratio_condition1", r.max_ratio_condition1},
                {"sum_beta", r.sum_beta},
                {"sum_beta_squared", r.sum_beta_squared},
                {"max_gap_condition3", r.max_gap_condition3}};
}

Json to_json(const FunctionalReport& r) {
    return Json{{"passed", r.passed},
                {"failed_condition", r.failed_condition},
                {"counterexample", r.counterexample},
                {"lipschitz_estimate", r.lipschitz_estimate},
                {"odd", r.odd}};
}

} // namespace peakrl::io
