#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "relaynet/environment.hpp"
#include "relaynet/markov.hpp"
#include "relaynet/robust.hpp"
#include "relaynet/training.hpp"

namespace relaynet {

struct EvaluationConfig {
  int episodes = 100;
  int horizon = 50;
  std::uint64_t seed = 2024;
};

/// Everything that defines an experiment. Defaults form the desk-scale
/// scenario: 3 relays, 5 candidate locations each, training on locations 1-3.
struct Scenario {
  NetworkConfig network;
  OutageMode outage_mode = OutageMode::Or;
  Geometry geometry;
  std::vector<double> thresholds{1.0};  // candidate decode thresholds, shared by all relays
  MarkovBuildOptions markov;
  ObservationEncoding observation = ObservationEncoding::OneHot;
  std::vector<int> train_locations{1, 2, 3};
  std::vector<int> train_thresholds{0};
  PpoConfig ppo;
  DqnConfig dqn;
  DdpgConfig ddpg;
  EvaluationConfig evaluation;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
};

nlohmann::json to_json(const Scenario& scenario);

/// Keys missing from `doc` keep their defaults; unknown keys and type
/// mismatches are errors naming the dotted key path.
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Applies "a.b.c=value" to `doc`. The value is read as JSON when it parses,
/// otherwise as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// FNV-1a of the canonical JSON dump.
std::uint64_t config_hash(const Scenario& scenario);

/// Candidate sets, grid and Markov model for the scenario.
std::shared_ptr<const RelayWorld> make_world(const Scenario& scenario);

/// Grid ids whose relays all sit on training locations/thresholds.
ParameterDistribution train_distribution(const Scenario& scenario, const ParameterGrid& grid);

}  // namespace relaynet
