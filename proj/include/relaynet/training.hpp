#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaynet/mdp.hpp"
#include "relaynet/policy.hpp"
#include "relaynet/robust.hpp"

namespace relaynet {

/// Per-episode training statistics. Rates are success fractions of the
/// rollouts collected for each sampled parameter in that episode.
struct EpisodeStats {
  int episode = 0;
  double avg_eta = 0.0;
  double worst_eta = 0.0;
  double avg_rate = 0.0;
  double worst_rate = 0.0;
  std::size_t accepted = 0;
  std::size_t updates = 0;
  double actor_objective = 0.0;  // PPO: clipped surrogate; DQN: unused; DDPG: mean Q of actor actions
  double critic_loss = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  std::vector<std::size_t> parameters;  // sampled ids, in order
  std::uint64_t parameter_hash = 0;     // network parameters after the episode
};

struct TrainReport {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<EpisodeStats> episodes;
  std::size_t gradient_updates = 0;
};

/// Column header of the metrics CSV written by write_metrics_csv.
inline constexpr const char* kMetricsHeader =
    "episode,avg_eta,worst_eta,avg_rate,worst_rate,accepted,actor_objective,critic_loss,mean_ratio,max_ratio";

void write_metrics_csv(std::ostream& out, const TrainReport& report);
/// Training curves: episode,avg_rate,worst_rate,method,seed (no header when
/// `header` is false, so several runs can be concatenated).
void write_curves_csv(std::ostream& out, const TrainReport& report, bool header = true);

/// One behavior-policy decision: policy-space sample, its log-density and
/// the executed action.
struct Decision {
  std::array<double, 2> raw{};
  double log_prob = 0.0;
  Action action;
};

using Behavior = std::function<Decision(const std::vector<double>& observation, Rng& rng)>;

/// Collects `trials` consecutive trials of `horizon` steps on one parameter.
/// The environment is reset once, as in the outer training loop.
std::vector<Trajectory> rollout(const EnvironmentFactory& factory, std::size_t parameter_id, const Behavior& behavior,
                                int trials, int horizon, std::uint64_t seed);
std::vector<Trajectory> rollout(const EnvironmentFactory& factory, std::size_t parameter_id, const Policy& policy,
                                int trials, int horizon, std::uint64_t seed);

/// Stochastic behavior of a Gaussian actor.
Behavior gaussian_behavior(const Mlp& actor, ActionSpace space);

/// Fraction of rewarded steps.
double success_rate(std::span<const Trajectory> trials);

struct ActorCriticResult {
  ActorCritic agent;
  TrainReport report;
};

/// Robust alternate optimization: per episode, sample parameters, roll out,
/// find the worst parameter and update only on parameters that pass
/// robust_filter. `workers` > 1 runs rollouts concurrently; results do not
/// depend on it.
ActorCriticResult train_robust(const EnvironmentFactory& factory, const ParameterDistribution& train,
                               const PpoConfig& config, std::uint64_t seed, int workers = 1);

/// Same loop, updating on every sampled parameter.
ActorCriticResult train_ppo(const EnvironmentFactory& factory, const ParameterDistribution& train,
                            const PpoConfig& config, std::uint64_t seed, int workers = 1);

/// Random-policy rollouts through the same outer loop (curves only).
TrainReport train_random(const EnvironmentFactory& factory, const ParameterDistribution& train,
                         const PpoConfig& config, std::uint64_t seed);

// ---- DQN -----------------------------------------------------------------

struct DqnConfig {
  int power_levels = 5;
  std::size_t replay_capacity = 20000;
  int batch = 32;
  int warmup = 500;
  int target_sync = 250;  // environment steps between hard target copies
  int train_every = 1;
  double learning_rate = 1e-3;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_steps = 20000;

  void validate() const;
};

struct ReplayItem {
  std::vector<double> observation;
  int action = 0;        // discrete index (DQN) or unused
  std::array<double, 2> z{};  // normalized continuous action (DDPG)
  double reward = 0.0;
  std::vector<double> next_observation;
};

/// Fixed-capacity ring buffer; the oldest item is overwritten when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(ReplayItem item);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<const ReplayItem*> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<ReplayItem> items_;
};

struct DqnResult {
  Mlp q;
  DiscreteActions actions;
  TrainReport report;
};

DqnResult train_dqn(const EnvironmentFactory& factory, const ParameterDistribution& train, const PpoConfig& loop,
                    const DqnConfig& config, std::uint64_t seed);

// ---- DDPG ----------------------------------------------------------------

struct DdpgConfig {
  double tau = 0.005;
  double noise_std = 0.3;  // additive Gaussian noise in normalized action units
  std::size_t replay_capacity = 20000;
  int batch = 64;
  int warmup = 500;
  int train_every = 1;

  void validate() const;
};

/// Polyak update target <- tau * online + (1 - tau) * target.
void soft_update(Mlp& target, const Mlp& online, double tau);

struct DdpgResult {
  Mlp actor;
  Mlp critic;
  ActionSpace space;
  TrainReport report;
};

DdpgResult train_ddpg(const EnvironmentFactory& factory, const ParameterDistribution& train, const PpoConfig& loop,
                      const DdpgConfig& config, std::uint64_t seed);

}  // namespace relaynet
