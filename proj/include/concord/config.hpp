#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "concord/simulator.hpp"

namespace concord {

// Declarative experiment document. `kind` selects a preset whose fields can
// be overridden by explicit keys; "custom" starts from bare defaults.
struct ExperimentConfig {
    std::string kind = "custom";
    SimulationConfig sim;
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output_dir = "out";
};

SimulationConfig preset_regression_toy();
SimulationConfig preset_weak_node_toy();
SimulationConfig preset_classification_toy();

// Strict parsing: unknown keys are rejected with their path; parse errors
// report the line in the file.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);

nlohmann::json simconfig_to_json(const SimulationConfig& config);
SimulationConfig simconfig_from_json(const nlohmann::json& doc);

// On-disk run layout: manifest.json (resolved config + master seed),
// metrics.csv, trust_round_<t>.csv, predictions_round_<t>.csv.
void export_history(const History& history, const std::filesystem::path& dir);
History import_history(const std::filesystem::path& dir);

}  // namespace concord
