#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

/// Executable action: relay in 1..K and source power in [0, P_max].
struct Action {
  int relay = 1;
  double source_power = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

/// Maps a continuous policy output onto a feasible action: the relay value is
/// clamped into [1, K+1) and floored, the power is clamped into [0, P_max].
Action decode_action(double relay_value, double power_value, int relays, double max_power);

/// Throws InvalidAction unless `action` lies inside the action space.
void check_action(const Action& action, int relays, double max_power);

/// Environment seen by every learner. Rewards are success bits.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t observation_size() const = 0;
  virtual int relay_count() const = 0;
  virtual double max_power() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual std::vector<double> observe() const = 0;
  virtual int step(const Action& action) = 0;
};

/// Creates environments for parameter ids of a discrete grid, and measures
/// how far apart two parameters are.
class EnvironmentFactory {
 public:
  virtual ~EnvironmentFactory() = default;
  virtual std::unique_ptr<Environment> make(std::size_t parameter_id) const = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual double parameter_distance(std::size_t a, std::size_t b) const = 0;
  virtual std::size_t observation_size() const = 0;
  virtual int relay_count() const = 0;
  virtual double max_power() const = 0;
};

struct Transition {
  std::vector<double> observation;
  std::array<double, 2> raw_action{};  // policy-space sample (normalized coordinates)
  Action action;
  int reward = 0;
  std::vector<double> next_observation;
  double log_prob = 0.0;
};

struct Trajectory {
  std::size_t parameter_id = 0;
  std::uint64_t seed = 0;
  std::vector<Transition> steps;
};

/// Probability weights over a subset of grid parameter ids.
struct ParameterDistribution {
  std::vector<std::size_t> ids;
  std::vector<double> weights;

  static ParameterDistribution uniform(std::vector<std::size_t> ids);
  void validate() const;
};

std::vector<std::size_t> sample_parameters(const ParameterDistribution& dist, std::size_t count, Rng& rng);

/// Mean over trials of sum_t gamma^t r_t, t counted from 0.
double discounted_return(std::span<const Trajectory> trials, double gamma);
double discounted_return(std::span<const int> rewards, double gamma);

/// Line-delimited trajectory log. One line per step:
///   step <param> <seed> <t> <raw0> <raw1> <relay> <power> <reward> <logp> <n> <obs x n> <next x n>
void write_trajectory_log(std::ostream& out, std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_trajectory_log(std::istream& in);

}  // namespace relaynet
