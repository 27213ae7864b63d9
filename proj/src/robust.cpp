#include "relaynet/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "relaynet/environment.hpp"

namespace relaynet {

void PpoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ppo config: ") + what);
  };
  require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
  require(clip > 0.0 && clip < 1.0, "clip must be in (0, 1)");
  require(zeta >= 0.0, "zeta must be >= 0");
  require(epochs >= 1 && minibatch >= 1, "epochs and minibatch must be >= 1");
  require(episodes >= 1 && parameters_per_episode >= 1 && trials >= 1 && horizon >= 1, "loop bounds must be >= 1");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be > 0");
}

double actor_loss(double ratio, double delta, double clip) {
  if (!(ratio > 0.0)) throw std::invalid_argument("actor_loss: probability ratio must be > 0 (corrupted log-prob?)");
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * delta, clipped * delta);
}

double actor_loss_ratio_gradient(double ratio, double delta, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return ratio * delta <= clipped * delta ? delta : 0.0;
}

double tv_distance_params(const EnvironmentParameter& a, const EnvironmentParameter& b, const ParameterGrid& grid) {
  const auto& cands = grid.candidates();
  const std::size_t relays = cands.size();
  if (a.location.size() != relays || b.location.size() != relays || a.threshold.size() != relays ||
      b.threshold.size() != relays || a.id >= grid.size() || b.id >= grid.size()) {
    throw std::invalid_argument("tv_distance_params: parameters do not belong to this grid");
  }
  auto rank_fraction = [](const std::vector<double>& set, double value) {
    const auto below = std::count_if(set.begin(), set.end(), [value](double x) { return x < value; });
    return static_cast<double>(below) / static_cast<double>(set.size() - 1);
  };
  double total = 0.0;
  int components = 0;
  for (std::size_t k = 0; k < relays; ++k) {
    const auto& c = cands[k];
    if (c.source_distance.size() > 1) {
      total += std::abs(rank_fraction(c.source_distance, c.source_distance.at(a.location[k])) -
                        rank_fraction(c.source_distance, c.source_distance.at(b.location[k])));
      total += std::abs(rank_fraction(c.destination_distance, c.destination_distance.at(a.location[k])) -
                        rank_fraction(c.destination_distance, c.destination_distance.at(b.location[k])));
      components += 2;
    }
    if (c.thresholds.size() > 1) {
      total += std::abs(rank_fraction(c.thresholds, c.thresholds.at(a.threshold[k])) -
                        rank_fraction(c.thresholds, c.thresholds.at(b.threshold[k])));
      components += 1;
    }
  }
  return components == 0 ? 0.0 : total / components;
}

std::vector<std::size_t> robust_filter(std::span<const double> etas, std::span<const double> distances, double zeta,
                                       double eta_worst) {
  if (etas.empty()) throw std::invalid_argument("robust_filter: empty eta list");
  if (distances.size() != etas.size()) throw std::invalid_argument("robust_filter: one distance per parameter required");
  std::vector<std::size_t> accepted;
  for (std::size_t m = 0; m < etas.size(); ++m) {
    if (etas[m] - zeta * distances[m] >= eta_worst) accepted.push_back(m);
  }
  return accepted;
}

ActorCritic::ActorCritic(std::size_t observation_size, ActionSpace action_space, const PpoConfig& config,
                         Rng& init_rng)
    : space(action_space),
      actor(Mlp::standard(static_cast<int>(observation_size), 4)),
      critic(Mlp::standard(static_cast<int>(observation_size + action_space.feature_size()), 1)),
      actor_optimizer(config.actor_lr),
      critic_optimizer(config.critic_lr) {
  actor.initialize(init_rng);
  critic.initialize(init_rng);
  old_actor = actor;
}

Action ActorCritic::mean_action(const Eigen::Ref<const Eigen::VectorXd>& observation) const {
  const auto head = GaussianHead::from_output(actor.forward(Eigen::VectorXd(observation)));
  return space.decode(head.mean);
}

SurrogateGradient surrogate_gradient(const Mlp& actor, const Eigen::MatrixXd& observations,
                                     std::span<const std::array<double, 2>> samples,
                                     const Eigen::VectorXd& old_log_prob, const Eigen::VectorXd& delta, double clip) {
  const auto size = observations.cols();
  if (static_cast<Eigen::Index>(samples.size()) != size || old_log_prob.size() != size || delta.size() != size) {
    throw std::invalid_argument("surrogate_gradient: batch size mismatch");
  }
  Tape tape;
  const Eigen::MatrixXd out = actor.forward(observations, tape);
  Eigen::MatrixXd upstream(4, size);
  const double scale = 1.0 / static_cast<double>(size);
  SurrogateGradient result;
  for (Eigen::Index j = 0; j < size; ++j) {
    const auto& sample = samples[static_cast<std::size_t>(j)];
    const auto head = GaussianHead::from_output(out.col(j));
    // exp underflows to 0 once the sample is ~700 nats less likely; such a
    // sample has no influence, so keep the ratio at the smallest normal.
    const double ratio = std::max(std::exp(log_prob(head, sample) - old_log_prob[j]), std::numeric_limits<double>::min());
    const double d_ratio = actor_loss_ratio_gradient(ratio, delta[j], clip);
    upstream.col(j) = scale * d_ratio * ratio * log_prob_gradient(head, sample);
    result.objective_sum += actor_loss(ratio, delta[j], clip);
    result.ratio_sum += ratio;
    result.max_ratio = std::max(result.max_ratio, ratio);
  }
  result.gradient = actor.backward(tape, upstream);
  return result;
}

CriticGradient critic_gradient(const Mlp& critic, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets) {
  if (targets.size() != inputs.cols()) throw std::invalid_argument("critic_gradient: batch size mismatch");
  Tape tape;
  const Eigen::RowVectorXd q = critic.forward(inputs, tape);
  const double scale = 1.0 / static_cast<double>(inputs.cols());
  CriticGradient result;
  result.delta = targets - q.transpose();
  Eigen::RowVectorXd upstream(inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    result.loss_sum += critic_loss(result.delta[j]);
    upstream[j] = scale * critic_loss_gradient(result.delta[j]);
  }
  result.gradient = critic.backward(tape, upstream);
  return result;
}

UpdateStats ppo_update(ActorCritic& agent, std::span<const Transition* const> batch, const PpoConfig& config,
                       Rng& rng) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto obs_dim = static_cast<Eigen::Index>(batch.front()->observation.size());
  const auto feat_dim = static_cast<Eigen::Index>(agent.space.feature_size());
  if (obs_dim != agent.actor.input_size() || obs_dim + feat_dim != agent.critic.input_size()) {
    throw std::invalid_argument("ppo_update: observation size does not match the networks");
  }

  Eigen::MatrixXd obs(obs_dim, n);
  Eigen::MatrixXd next_obs(obs_dim, n);
  Eigen::MatrixXd critic_in(obs_dim + feat_dim, n);
  Eigen::VectorXd rewards(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    obs.col(i) = as_vector(t.observation);
    next_obs.col(i) = as_vector(t.next_observation);
    critic_in.col(i).head(obs_dim) = obs.col(i);
    agent.space.write_features(t.action, critic_in.col(i).tail(feat_dim).data());
    rewards[i] = t.reward;
  }

  // log pi(a|s; theta_mu^-), fixed for the whole update
  Eigen::VectorXd old_log_prob(n);
  {
    const Eigen::MatrixXd out = agent.old_actor.forward(obs);
    for (Eigen::Index i = 0; i < n; ++i) {
      old_log_prob[i] = log_prob(GaussianHead::from_output(out.col(i)), batch[static_cast<std::size_t>(i)]->raw_action);
    }
  }

  UpdateStats stats;
  stats.samples = static_cast<std::size_t>(n);
  {
    const Eigen::MatrixXd out = agent.actor.forward(obs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      total += std::exp(log_prob(GaussianHead::from_output(out.col(i)), batch[static_cast<std::size_t>(i)]->raw_action) -
                        old_log_prob[i]);
    }
    stats.initial_mean_ratio = total / static_cast<double>(n);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  double objective_sum = 0.0;
  double critic_sum = 0.0;
  double ratio_sum = 0.0;
  std::size_t evaluated = 0;
  stats.max_ratio = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += config.minibatch) {
      const Eigen::Index size = std::min<Eigen::Index>(config.minibatch, n - start);
      Eigen::MatrixXd mb_obs(obs_dim, size);
      Eigen::MatrixXd mb_next(obs_dim, size);
      Eigen::MatrixXd mb_critic(obs_dim + feat_dim, size);
      for (Eigen::Index j = 0; j < size; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + j)];
        mb_obs.col(j) = obs.col(i);
        mb_next.col(j) = next_obs.col(i);
        mb_critic.col(j) = critic_in.col(i);
      }

      // max_a' Q(s', a') approximated at the current actor's mean action
      Eigen::MatrixXd next_critic(obs_dim + feat_dim, size);
      {
        const Eigen::MatrixXd next_out = agent.actor.forward(mb_next);
        for (Eigen::Index j = 0; j < size; ++j) {
          next_critic.col(j).head(obs_dim) = mb_next.col(j);
          const auto head = GaussianHead::from_output(next_out.col(j));
          agent.space.write_features(agent.space.decode(head.mean), next_critic.col(j).tail(feat_dim).data());
        }
      }
      const Eigen::RowVectorXd q_next = agent.critic.forward(next_critic);

      Eigen::VectorXd targets(size);
      std::vector<std::array<double, 2>> samples(static_cast<std::size_t>(size));
      Eigen::VectorXd mb_old(size);
      for (Eigen::Index j = 0; j < size; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(start + j)];
        targets[j] = rewards[i] + config.gamma * q_next[j];
        samples[static_cast<std::size_t>(j)] = batch[static_cast<std::size_t>(i)]->raw_action;
        mb_old[j] = old_log_prob[i];
      }
      const auto critic_step = critic_gradient(agent.critic, mb_critic, targets);
      const auto actor_step =
          surrogate_gradient(agent.actor, mb_obs, samples, mb_old, critic_step.delta, config.clip);
      objective_sum += actor_step.objective_sum;
      critic_sum += critic_step.loss_sum;
      ratio_sum += actor_step.ratio_sum;
      stats.max_ratio = std::max(stats.max_ratio, actor_step.max_ratio);
      evaluated += static_cast<std::size_t>(size);
      if (!std::isfinite(objective_sum) || !std::isfinite(critic_sum)) {
        throw std::runtime_error("ppo_update: non-finite loss (epoch " + std::to_string(epoch) + ")");
      }
      // descend the negated objective
      adam_step(agent.actor_optimizer, agent.actor, -actor_step.gradient);
      adam_step(agent.critic_optimizer, agent.critic, critic_step.gradient);
    }
  }
  stats.actor_objective = objective_sum / static_cast<double>(evaluated);
  stats.critic_loss = critic_sum / static_cast<double>(evaluated);
  stats.mean_ratio = ratio_sum / static_cast<double>(evaluated);
  return stats;
}

UpdateStats ppo_update(ActorCritic& agent, std::span<const Trajectory> batch, const PpoConfig& config, Rng& rng) {
  std::vector<const Transition*> flat;
  for (const auto& traj : batch) {
    for (const auto& s : traj.steps) flat.push_back(&s);
  }
  return ppo_update(agent, std::span<const Transition* const>(flat), config, rng);
}

}  // namespace relaynet
