#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedfits/orchestrator.hpp"

namespace fedfits {

/// Config problem tied to a dotted JSON path such as "fitness.beta".
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string path, const std::string& message);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Sets a dotted key in a JSON document from "key=value" text. The value is
/// read as JSON when it parses as JSON and as a plain string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Builds and validates a config. Overrides are applied to the document
/// before it is read. Unknown keys, wrong types and invalid values throw
/// ConfigError naming the offending path.
ExperimentConfig parse_config(nlohmann::json doc, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_file(const std::string& path,
                                   const std::vector<std::string>& overrides = {});

/// Every field with defaults resolved; parse_config(config_to_json(c)) gives c back.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// SHA-256 (hex) of the compact config_to_json text.
std::string config_digest(const ExperimentConfig& config);

nlohmann::json summary_json(const RunResult& result, const ExperimentConfig& config);

}  // namespace fedfits
