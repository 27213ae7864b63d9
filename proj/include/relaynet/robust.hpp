#pragma once

#include <span>
#include <vector>

#include "relaynet/mdp.hpp"
#include "relaynet/nn.hpp"
#include "relaynet/policy.hpp"

namespace relaynet {

struct EnvironmentParameter;
class ParameterGrid;

/// Hyper-parameters of the actor-critic learners and the outer sampling loop.
struct PpoConfig {
  double gamma = 0.9;
  double clip = 0.2;   // kappa
  double zeta = 1.0;   // TV penalty constant of the robust filter
  int epochs = 4;
  int minibatch = 64;
  int episodes = 300;                // u_max
  int parameters_per_episode = 8;    // m_max
  int trials = 8;                    // l_max
  int horizon = 50;                  // t_max
  double actor_lr = 1e-3;
  double critic_lr = 5e-3;

  void validate() const;
};

/// TD error r + gamma * max Q(s', .) - Q(s, a).
inline double advantage(double reward, double gamma, double next_q_max, double q) {
  return reward + gamma * next_q_max - q;
}

/// delta^2; the TD target is held constant when differentiating.
inline double critic_loss(double delta) { return delta * delta; }
/// d critic_loss / d Q(s, a).
inline double critic_loss_gradient(double delta) { return -2.0 * delta; }

/// Clipped surrogate min(ratio * delta, clip(ratio, 1-k, 1+k) * delta), to be
/// maximized. Throws on a non-positive ratio.
double actor_loss(double ratio, double delta, double clip);
/// d actor_loss / d ratio (delta on the unclipped branch, 0 when clipped).
double actor_loss_ratio_gradient(double ratio, double delta, double clip);

/// TV-style distance between two grid parameters. Every varying component
/// (per relay: source distance, destination distance, threshold) is mapped to
/// its rank fraction in its sorted candidate set; the distance is the mean
/// absolute difference over components whose candidate set has more than one
/// value, i.e. half the L1 distance rescaled into [0, 1].
double tv_distance_params(const EnvironmentParameter& a, const EnvironmentParameter& b, const ParameterGrid& grid);

/// Indices m with eta_m - zeta * distance_m >= eta_worst.
std::vector<std::size_t> robust_filter(std::span<const double> etas, std::span<const double> distances, double zeta,
                                       double eta_worst);

/// Actor (theta_mu), frozen old actor (theta_mu^-) and Q critic (theta_Q)
/// with their Adam states. The critic input is the observation followed by
/// the executed action's features.
struct ActorCritic {
  ActionSpace space;
  Mlp actor;
  Mlp old_actor;
  Mlp critic;
  AdamState actor_optimizer;
  AdamState critic_optimizer;

  ActorCritic(std::size_t observation_size, ActionSpace space, const PpoConfig& config, Rng& init_rng);

  void sync_old_actor() { old_actor = actor; }
  /// Mean action of the current actor.
  Action mean_action(const Eigen::Ref<const Eigen::VectorXd>& observation) const;
};

/// Clipped surrogate summed over a minibatch, and the gradient of its mean
/// with respect to the actor parameters (ascent direction).
struct SurrogateGradient {
  double objective_sum = 0.0;
  double ratio_sum = 0.0;
  double max_ratio = 0.0;
  Eigen::VectorXd gradient;
};

SurrogateGradient surrogate_gradient(const Mlp& actor, const Eigen::MatrixXd& observations,
                                     std::span<const std::array<double, 2>> samples,
                                     const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& delta, double clip);

/// Squared TD error summed over a minibatch, and the gradient of its mean
/// with respect to the critic parameters. `targets` are held constant.
struct CriticGradient {
  double loss_sum = 0.0;
  Eigen::VectorXd delta;
  Eigen::VectorXd gradient;
};

CriticGradient critic_gradient(const Mlp& critic, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets);

struct UpdateStats {
  double actor_objective = 0.0;  // mean clipped surrogate over all minibatch evaluations
  double critic_loss = 0.0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  double initial_mean_ratio = 0.0;  // before the first gradient step
  std::size_t samples = 0;
};

/// Runs `epochs` passes of shuffled minibatches over the batch, ascending the
/// clipped surrogate for the actor against the frozen old actor and
/// descending the squared TD error for the critic. The caller synchronizes
/// the old actor beforehand.
UpdateStats ppo_update(ActorCritic& agent, std::span<const Transition* const> batch, const PpoConfig& config,
                       Rng& rng);
UpdateStats ppo_update(ActorCritic& agent, std::span<const Trajectory> batch, const PpoConfig& config, Rng& rng);

}  // namespace relaynet
