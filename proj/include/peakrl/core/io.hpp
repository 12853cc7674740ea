#pragma once

#include "peakrl/core/envs.hpp"
#include "peakrl/core/learners.hpp"
#include "peakrl/core/mdp.hpp"
#include "peakrl/core/oracle.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace peakrl::io {

using Json = nlohmann::json;

/// Parses text, turning syntax errors into ParseError with line and column.
Json parse_json(const std::string& text, const std::string& origin = "<input>");
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Instance document: n_states, n_actions, gamma (optional), bound_c, kernel
/// [s][a][s+], reward [s][a], constraints [j][s][a], recurrent_state (optional).
MdpInstance instance_from_json(const Json& doc);
Json instance_to_json(const MdpInstance& inst);
MdpInstance load_instance(const std::filesystem::path& path);

/// Environment spec document with a `type` discriminator: raw_mdp (default),
/// wireless, search_engine or random.
MdpInstance environment_from_json(const Json& doc);
RandomInstanceParams random_params_from_json(const Json& doc);
WirelessEnvSpec wireless_from_json(const Json& doc);
SearchEngineEnvSpec search_engine_from_json(const Json& doc);

LearnerConfig learner_config_from_json(const Json& doc, LearnerConfig base = {});
Json learner_config_to_json(const LearnerConfig& config);

Json table_to_json(const StateActionTable& t);
Json to_json(const PolicyCheckReport& r);
Json to_json(const FeasibilityVerdict& v);
Json to_json(const AuditReport& r);
Json to_json(const ScheduleReport& r);
Json to_json(const FunctionalReport& r);

} // namespace peakrl::io
