#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptsim/agents.hpp"
#include "adaptsim/env.hpp"
#include "adaptsim/qol.hpp"

namespace adaptsim {

inline constexpr const char* kToolVersion = "0.1.0";

struct Scenario {
  std::string name;
  std::shared_ptr<const World> world;
  EnvConfig env;  // env.world == world
  AgentConfig agent;
  // Set when weights were fitted from a survey rather than given directly.
  std::optional<SurveyData> survey;
  FitConfig fit;
  std::optional<FitReport> fit_report;
};

/// Loads a JSON scenario config and the data files it names (paths relative to
/// the config). Everything is validated before returning; errors name the file
/// and, for tabular inputs, the line.
Scenario load_scenario(const std::string& config_path);

// All inputs inline in a canonical form; the basis of the content hash.
nlohmann::json canonical_json(const Scenario& s);
std::string content_hash(const Scenario& s);
// Writes config.json and its data files into `dir` (created if needed).
void save_scenario(const Scenario& s, const std::string& dir);

std::string sha256_hex(const std::string& bytes);

}  // namespace adaptsim
