#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "relaynet/environment.hpp"
#include "relaynet/evaluation.hpp"
#include "relaynet/scenario.hpp"
#include "relaynet/training.hpp"

namespace relaynet {

enum class Method { Robust, Ppo, Ddpg, Dqn, Random };

/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);
std::string_view to_string(Method method);

/// Frozen networks plus what is needed to rebuild the policy and to check
/// that it is evaluated on the grid it was trained for.
struct TrainedModel {
  Method method = Method::Random;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::vector<RelayCandidates> candidates;
  int relays = 1;
  double max_power = 1.0;
  int power_levels = 0;  // DQN only
  std::map<std::string, Mlp> networks;

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

inline constexpr const char* kCheckpointMagic = "relaynet-checkpoint";
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const TrainedModel& model);
/// Throws ParseError on a version mismatch or a malformed field.
TrainedModel load_checkpoint(std::istream& in);

std::unique_ptr<Policy> make_policy(const TrainedModel& model);

struct TrainOutcome {
  TrainedModel model;
  TrainReport report;
};

TrainOutcome train_method(const Scenario& scenario, const RelayEnvironmentFactory& factory, Method method,
                          std::uint64_t seed, int workers = 1);

/// Train ids from the scenario's train subset, test ids = the whole grid.
EvalProtocol make_protocol(const Scenario& scenario, const ParameterGrid& grid);

/// Throws std::runtime_error when the checkpoint was trained on a different
/// grid than `grid`.
void check_grid(const TrainedModel& model, const ParameterGrid& grid);

/// Plain-text run record: config hash, seeds, grid, train/unseen ids.
void write_manifest(std::ostream& out, const Scenario& scenario, const ParameterGrid& grid, Method method,
                    std::uint64_t seed, const EvalProtocol& protocol);

}  // namespace relaynet
