#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relaynet/mdp.hpp"
#include "relaynet/nn.hpp"

namespace relaynet {

/// Affine map between the policy's normalized coordinates z in [-1, 1]^2 and
/// physical raw actions: z_relay = -1 -> relay value 1, z_relay = 1 -> K+1;
/// z_power = -1 -> 0 W, z_power = 1 -> P_max.
struct ActionSpace {
  int relays = 1;
  double max_power = 1.0;

  std::array<double, 2> to_physical(const std::array<double, 2>& z) const;
  Action decode(const std::array<double, 2>& z) const;

  /// Critic features of an executed action: relay one-hot then P_s / P_max.
  std::size_t feature_size() const { return static_cast<std::size_t>(relays) + 1; }
  void write_features(const Action& action, double* out) const;
};

/// Frozen decision rule used for rollouts and evaluation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const std::vector<double>& observation, Rng& rng) const = 0;
};

/// Relay uniform on 1..K, source power uniform on [0, P_max].
Action random_policy(int relays, double max_power, Rng& rng);

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(int relays, double max_power) : relays_(relays), max_power_(max_power) {}
  Action act(const std::vector<double>&, Rng& rng) const override { return random_policy(relays_, max_power_, rng); }

 private:
  int relays_;
  double max_power_;
};

/// Gaussian actor. Greedy mode executes the mean.
class GaussianPolicy final : public Policy {
 public:
  GaussianPolicy(Mlp actor, ActionSpace space, bool greedy) : actor_(std::move(actor)), space_(space), greedy_(greedy) {}
  Action act(const std::vector<double>& observation, Rng& rng) const override;

 private:
  Mlp actor_;
  ActionSpace space_;
  bool greedy_;
};

/// Deterministic actor whose output passes through tanh.
class DeterministicPolicy final : public Policy {
 public:
  DeterministicPolicy(Mlp actor, ActionSpace space) : actor_(std::move(actor)), space_(space) {}
  Action act(const std::vector<double>& observation, Rng& rng) const override;

 private:
  Mlp actor_;
  ActionSpace space_;
};

/// Discrete action index a = (relay - 1) * levels + level, with source power
/// level * P_max / (levels - 1).
struct DiscreteActions {
  int relays = 1;
  int levels = 2;
  double max_power = 1.0;

  int size() const { return relays * levels; }
  Action action(int index) const;
};

class GreedyQPolicy final : public Policy {
 public:
  GreedyQPolicy(Mlp q, DiscreteActions actions) : q_(std::move(q)), actions_(actions) {}
  Action act(const std::vector<double>& observation, Rng& rng) const override;

 private:
  Mlp q_;
  DiscreteActions actions_;
};

inline Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace relaynet
