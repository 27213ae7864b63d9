#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "relaynet/channel.hpp"
#include "relaynet/markov.hpp"
#include "relaynet/mdp.hpp"

namespace relaynet {

/// One realization of the uncertainty tuple: per-relay location (which fixes
/// both hop distances) and per-relay decode threshold.
struct EnvironmentParameter {
  std::size_t id = 0;
  std::vector<int> location;   // index into each relay's candidate locations
  std::vector<int> threshold;  // index into each relay's candidate thresholds
  std::vector<double> source_distance;
  std::vector<double> destination_distance;
  std::vector<double> relay_threshold;
};

/// Discrete product grid over every relay's (location, threshold) choices.
/// Ids are mixed-radix: relay 0 is the least significant digit.
class ParameterGrid {
 public:
  ParameterGrid() = default;
  explicit ParameterGrid(std::vector<RelayCandidates> candidates);

  std::size_t size() const { return size_; }
  int relays() const { return static_cast<int>(candidates_.size()); }
  int locations() const { return locations_; }
  int thresholds() const { return thresholds_; }
  const std::vector<RelayCandidates>& candidates() const { return candidates_; }

  EnvironmentParameter at(std::size_t id) const;
  std::size_t id_of(std::span<const int> location, std::span<const int> threshold) const;

  /// All ids whose every relay uses one of the given location and threshold
  /// indices.
  std::vector<std::size_t> subset(const std::vector<int>& locations, const std::vector<int>& thresholds) const;

  friend bool operator==(const ParameterGrid& a, const ParameterGrid& b);

 private:
  std::vector<RelayCandidates> candidates_;
  int locations_ = 0;
  int thresholds_ = 0;
  std::size_t size_ = 0;
};

bool operator==(const RelayCandidates& a, const RelayCandidates& b);

/// How link states are turned into network input features.
enum class ObservationEncoding {
  OneHot,  // M features per link
  Index,   // one feature per link, index mapped linearly onto [-1, 1]
};

ObservationEncoding parse_observation_encoding(std::string_view name);
std::string_view to_string(ObservationEncoding encoding);

using ChannelState = std::vector<int>;  // one state index per link (2K entries)

std::size_t observation_width(ObservationEncoding encoding, int links, int states);
std::vector<double> encode_observation(const ChannelState& state, ObservationEncoding encoding, int states);

struct StepOutcome {
  ChannelState next_state;
  int reward = 0;  // success bit: 1 - outage
  double relay_rate = 0.0;
  double destination_rate = 0.0;
};

/// Evaluates the action on the current link states, then advances every
/// link by one Markov transition. Transitions consume exactly one uniform
/// draw per link, independently of the action.
StepOutcome env_step(const MarkovChannelModel& model, const NetworkConfig& config,
                     const EnvironmentParameter& param, const ChannelState& state, const Action& action,
                     OutageMode mode, Rng& rng);

ChannelState advance_state(const MarkovChannelModel& model, const EnvironmentParameter& param,
                           const ChannelState& state, Rng& rng);
ChannelState sample_stationary_state(const MarkovChannelModel& model, const EnvironmentParameter& param, Rng& rng);

/// Everything needed to instantiate relay environments for a grid.
struct RelayWorld {
  NetworkConfig network;
  ParameterGrid grid;
  std::shared_ptr<const MarkovChannelModel> model;
  OutageMode mode = OutageMode::Or;
  ObservationEncoding encoding = ObservationEncoding::OneHot;
};

/// Stateful relay network. The agent observes the link states of the
/// previous slot; rewards are computed on the current slot.
class RelayEnvironment final : public Environment {
 public:
  RelayEnvironment(std::shared_ptr<const RelayWorld> world, EnvironmentParameter param);

  std::size_t observation_size() const override;
  int relay_count() const override { return world_->network.relays; }
  double max_power() const override { return world_->network.max_power; }
  void reset(std::uint64_t seed) override;
  std::vector<double> observe() const override;
  int step(const Action& action) override;

  const ChannelState& observed_state() const { return previous_; }
  const ChannelState& current_state() const { return current_; }
  const EnvironmentParameter& parameter() const { return param_; }

 private:
  std::shared_ptr<const RelayWorld> world_;
  EnvironmentParameter param_;
  Rng rng_;
  ChannelState previous_;
  ChannelState current_;
};

class RelayEnvironmentFactory final : public EnvironmentFactory {
 public:
  explicit RelayEnvironmentFactory(std::shared_ptr<const RelayWorld> world);

  std::unique_ptr<Environment> make(std::size_t parameter_id) const override;
  std::size_t parameter_count() const override { return world_->grid.size(); }
  double parameter_distance(std::size_t a, std::size_t b) const override;
  std::size_t observation_size() const override;
  int relay_count() const override { return world_->network.relays; }
  double max_power() const override { return world_->network.max_power; }

  const RelayWorld& world() const { return *world_; }

 private:
  std::shared_ptr<const RelayWorld> world_;
};

}  // namespace relaynet
