#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "absa/stage.hpp"

namespace absa {

// TOML subset sufficient for run configs: [section] tables, dotted keys,
// strings, integers, floats, booleans, single-line homogeneous arrays, and
// '#' comments. Throws ConfigError with the offending line number.
nlohmann::json parse_toml(const std::string& text);

// Dispatches on content: files starting with '{' parse as JSON, everything
// else as TOML.
nlohmann::json load_config_file(const std::string& path);

// Fully materialized default configuration; every tunable the engine reads.
nlohmann::json default_config();

// Layered resolution with precedence flags > environment > file > defaults.
// Environment variables use the ABSA_ prefix: ABSA_TRAIN_BATCH_SIZE
// overrides train.batch_size. Unknown keys are configuration errors.
nlohmann::json resolve_config(const nlohmann::json& file_config,
                              const std::map<std::string, std::string>& env,
                              const std::vector<std::pair<std::string, std::string>>& flag_sets);

// Reads ABSA_*-prefixed variables from the process environment.
std::map<std::string, std::string> env_overrides();

// Canonical hash of a resolved config (sorted-key JSON dump).
std::string config_hash(const nlohmann::json& config);

// Builds the engine plan for one stage kind from a resolved config.
StagePlan plan_from_config(const nlohmann::json& config, StageKind kind);

}  // namespace absa
