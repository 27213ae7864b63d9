#include "relaynet/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

namespace relaynet {

namespace {

// Stream tags for make_rng / derive_seed.
enum : std::uint64_t { kInitStream = 0, kSampleStream = 1, kUpdateStream = 2, kRolloutStream = 3, kExploreStream = 4 };

std::uint64_t hash_networks(std::initializer_list<const Mlp*> nets) {
  std::uint64_t h = 14695981039346656037ull;
  for (const Mlp* net : nets) {
    const auto& p = net->parameters();
    h = fnv1a(std::vector<double>(p.data(), p.data() + p.size()), h);
  }
  return h;
}

// Runs fn(i) for i in [0, count) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn fn) {
  const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void fill_returns(EpisodeStats& stats, std::span<const double> etas, std::span<const double> rates) {
  stats.avg_eta = std::accumulate(etas.begin(), etas.end(), 0.0) / static_cast<double>(etas.size());
  stats.worst_eta = *std::min_element(etas.begin(), etas.end());
  stats.avg_rate = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
  stats.worst_rate = *std::min_element(rates.begin(), rates.end());
}

double epsilon_at(const DqnConfig& c, long step) {
  if (step >= c.epsilon_decay_steps) return c.epsilon_end;
  const double frac = static_cast<double>(step) / static_cast<double>(c.epsilon_decay_steps);
  return c.epsilon_start + frac * (c.epsilon_end - c.epsilon_start);
}

ActorCriticResult train_actor_critic(const EnvironmentFactory& factory, const ParameterDistribution& train,
                                     const PpoConfig& config, std::uint64_t seed, int workers, bool robust) {
  config.validate();
  train.validate();
  const ActionSpace space{factory.relay_count(), factory.max_power()};
  Rng init = make_rng(seed, {kInitStream});
  Rng sampler = make_rng(seed, {kSampleStream});
  Rng update_rng = make_rng(seed, {kUpdateStream});
  ActorCriticResult result{ActorCritic(factory.observation_size(), space, config, init), {}};
  auto& agent = result.agent;
  auto& report = result.report;
  report.method = robust ? "robust" : "ppo";
  report.seed = seed;

  const auto m_max = static_cast<std::size_t>(config.parameters_per_episode);
  for (int u = 0; u < config.episodes; ++u) {
    EpisodeStats stats;
    stats.episode = u;
    stats.parameters = sample_parameters(train, m_max, sampler);

    const Behavior behavior = gaussian_behavior(agent.actor, space);
    std::vector<std::vector<Trajectory>> batches(m_max);
    parallel_for(m_max, workers, [&](std::size_t m) {
      batches[m] = rollout(factory, stats.parameters[m], behavior, config.trials, config.horizon,
                           derive_seed(seed, {kRolloutStream, static_cast<std::uint64_t>(u), m}));
    });

    std::vector<double> etas(m_max), rates(m_max), distances(m_max);
    for (std::size_t m = 0; m < m_max; ++m) {
      etas[m] = discounted_return(batches[m], config.gamma);
      rates[m] = success_rate(batches[m]);
    }
    fill_returns(stats, etas, rates);
    const auto worst = static_cast<std::size_t>(std::min_element(etas.begin(), etas.end()) - etas.begin());
    for (std::size_t m = 0; m < m_max; ++m) {
      distances[m] = factory.parameter_distance(stats.parameters[worst], stats.parameters[m]);
    }

    std::vector<std::size_t> accepted(m_max);
    std::iota(accepted.begin(), accepted.end(), std::size_t{0});
    if (robust) accepted = robust_filter(etas, distances, config.zeta, etas[worst]);

    // theta_mu^- is the policy that collected this episode's samples
    agent.sync_old_actor();
    for (std::size_t m : accepted) {
      const UpdateStats u_stats = ppo_update(agent, std::span<const Trajectory>(batches[m]), config, update_rng);
      stats.actor_objective += u_stats.actor_objective;
      stats.critic_loss += u_stats.critic_loss;
      stats.mean_ratio += u_stats.mean_ratio;
      stats.max_ratio = std::max(stats.max_ratio, u_stats.max_ratio);
      ++stats.updates;
    }
    stats.accepted = accepted.size();
    if (stats.updates > 0) {
      const auto n = static_cast<double>(stats.updates);
      stats.actor_objective /= n;
      stats.critic_loss /= n;
      stats.mean_ratio /= n;
    }
    stats.parameter_hash = hash_networks({&agent.actor, &agent.critic});
    report.gradient_updates += stats.updates;
    report.episodes.push_back(std::move(stats));
  }
  return result;
}

std::vector<const ReplayItem*> checked_sample(const ReplayBuffer& buffer, int batch, Rng& rng) {
  return buffer.sample(static_cast<std::size_t>(batch), rng);
}

}  // namespace

void write_metrics_csv(std::ostream& out, const TrainReport& report) {
  out << kMetricsHeader << '\n';
  for (const auto& e : report.episodes) {
    out << e.episode << ',' << format_double(e.avg_eta) << ',' << format_double(e.worst_eta) << ','
        << format_double(e.avg_rate) << ',' << format_double(e.worst_rate) << ',' << e.accepted << ','
        << format_double(e.actor_objective) << ',' << format_double(e.critic_loss) << ','
        << format_double(e.mean_ratio) << ',' << format_double(e.max_ratio) << '\n';
  }
}

void write_curves_csv(std::ostream& out, const TrainReport& report, bool header) {
  if (header) out << "episode,avg_rate,worst_rate,method,seed\n";
  for (const auto& e : report.episodes) {
    out << e.episode << ',' << format_double(e.avg_rate) << ',' << format_double(e.worst_rate) << ','
        << report.method << ',' << report.seed << '\n';
  }
}

std::vector<Trajectory> rollout(const EnvironmentFactory& factory, std::size_t parameter_id, const Behavior& behavior,
                                int trials, int horizon, std::uint64_t seed) {
  if (trials < 1 || horizon < 1) throw std::invalid_argument("rollout: trials and horizon must be >= 1");
  auto env = factory.make(parameter_id);
  env->reset(seed);
  Rng rng = make_rng(seed, {1});
  std::vector<Trajectory> out(static_cast<std::size_t>(trials));
  std::vector<double> obs = env->observe();
  for (int l = 0; l < trials; ++l) {
    auto& traj = out[static_cast<std::size_t>(l)];
    traj.parameter_id = parameter_id;
    traj.seed = seed;
    traj.steps.reserve(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      const Decision d = behavior(obs, rng);
      Transition tr;
      tr.observation = obs;
      tr.raw_action = d.raw;
      tr.action = d.action;
      tr.log_prob = d.log_prob;
      tr.reward = env->step(d.action);
      obs = env->observe();
      tr.next_observation = obs;
      traj.steps.push_back(std::move(tr));
    }
  }
  return out;
}

std::vector<Trajectory> rollout(const EnvironmentFactory& factory, std::size_t parameter_id, const Policy& policy,
                                int trials, int horizon, std::uint64_t seed) {
  const Behavior behavior = [&policy](const std::vector<double>& obs, Rng& rng) {
    return Decision{{}, 0.0, policy.act(obs, rng)};
  };
  return rollout(factory, parameter_id, behavior, trials, horizon, seed);
}

Behavior gaussian_behavior(const Mlp& actor, ActionSpace space) {
  return [actor, space](const std::vector<double>& obs, Rng& rng) {
    const auto head = GaussianHead::from_output(actor.forward(as_vector(obs)));
    const auto [z, logp] = log_prob_and_sample(head, rng);
    return Decision{z, logp, space.decode(z)};
  };
}

double success_rate(std::span<const Trajectory> trials) {
  std::size_t steps = 0;
  long successes = 0;
  for (const auto& traj : trials) {
    steps += traj.steps.size();
    for (const auto& s : traj.steps) successes += s.reward;
  }
  if (steps == 0) throw std::invalid_argument("success_rate: no steps");
  return static_cast<double>(successes) / static_cast<double>(steps);
}

ActorCriticResult train_robust(const EnvironmentFactory& factory, const ParameterDistribution& train,
                               const PpoConfig& config, std::uint64_t seed, int workers) {
  return train_actor_critic(factory, train, config, seed, workers, true);
}

ActorCriticResult train_ppo(const EnvironmentFactory& factory, const ParameterDistribution& train,
                            const PpoConfig& config, std::uint64_t seed, int workers) {
  return train_actor_critic(factory, train, config, seed, workers, false);
}

TrainReport train_random(const EnvironmentFactory& factory, const ParameterDistribution& train,
                         const PpoConfig& config, std::uint64_t seed) {
  config.validate();
  train.validate();
  const RandomPolicy policy(factory.relay_count(), factory.max_power());
  Rng sampler = make_rng(seed, {kSampleStream});
  TrainReport report;
  report.method = "random";
  report.seed = seed;
  const auto m_max = static_cast<std::size_t>(config.parameters_per_episode);
  for (int u = 0; u < config.episodes; ++u) {
    EpisodeStats stats;
    stats.episode = u;
    stats.parameters = sample_parameters(train, m_max, sampler);
    std::vector<double> etas(m_max), rates(m_max);
    for (std::size_t m = 0; m < m_max; ++m) {
      const auto batch = rollout(factory, stats.parameters[m], policy, config.trials, config.horizon,
                                 derive_seed(seed, {kRolloutStream, static_cast<std::uint64_t>(u), m}));
      etas[m] = discounted_return(batch, config.gamma);
      rates[m] = success_rate(batch);
    }
    fill_returns(stats, etas, rates);
    report.episodes.push_back(std::move(stats));
  }
  return report;
}

// ---- replay ---------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayBuffer::push(ReplayItem item) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(item));
  } else {
    items_[next_] = std::move(item);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const ReplayItem*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("replay buffer: sample from empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const ReplayItem*> out(count);
  for (auto& p : out) p = &items_[pick(rng)];
  return out;
}

// ---- DQN ------------------------------------------------------------------

void DqnConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("dqn config: ") + what);
  };
  require(power_levels >= 2, "power_levels must be >= 2");
  require(replay_capacity >= 1 && batch >= 1 && warmup >= 0 && target_sync >= 1 && train_every >= 1,
          "buffer and schedule sizes must be positive");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0,
          "epsilon must be in [0, 1]");
  require(epsilon_decay_steps >= 1, "epsilon_decay_steps must be >= 1");
}

DqnResult train_dqn(const EnvironmentFactory& factory, const ParameterDistribution& train, const PpoConfig& loop,
                    const DqnConfig& config, std::uint64_t seed) {
  loop.validate();
  config.validate();
  train.validate();
  const DiscreteActions actions{factory.relay_count(), config.power_levels, factory.max_power()};
  const auto obs_dim = static_cast<Eigen::Index>(factory.observation_size());
  Rng init = make_rng(seed, {kInitStream});
  Rng sampler = make_rng(seed, {kSampleStream});
  Rng update_rng = make_rng(seed, {kUpdateStream});
  Rng explore = make_rng(seed, {kExploreStream});

  DqnResult result{Mlp::standard(static_cast<int>(obs_dim), actions.size()), actions, {}};
  Mlp& q = result.q;
  q.initialize(init);
  Mlp target = q;
  AdamState optimizer(config.learning_rate);
  ReplayBuffer buffer(config.replay_capacity);
  auto& report = result.report;
  report.method = "dqn";
  report.seed = seed;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> any_action(0, actions.size() - 1);
  long steps = 0;
  const auto m_max = static_cast<std::size_t>(loop.parameters_per_episode);

  for (int u = 0; u < loop.episodes; ++u) {
    EpisodeStats stats;
    stats.episode = u;
    stats.parameters = sample_parameters(train, m_max, sampler);
    std::vector<double> etas(m_max), rates(m_max);
    for (std::size_t m = 0; m < m_max; ++m) {
      auto env = factory.make(stats.parameters[m]);
      env->reset(derive_seed(seed, {kRolloutStream, static_cast<std::uint64_t>(u), m}));
      std::vector<double> obs = env->observe();
      double eta_sum = 0.0;
      long successes = 0;
      for (int l = 0; l < loop.trials; ++l) {
        double discount = 1.0;
        for (int t = 0; t < loop.horizon; ++t) {
          int index = 0;
          if (unit(explore) < epsilon_at(config, steps)) {
            index = any_action(explore);
          } else {
            Eigen::Index best = 0;
            q.forward(as_vector(obs)).maxCoeff(&best);
            index = static_cast<int>(best);
          }
          const int reward = env->step(actions.action(index));
          std::vector<double> next = env->observe();
          eta_sum += discount * reward;
          discount *= loop.gamma;
          successes += reward;
          buffer.push(ReplayItem{obs, index, {}, static_cast<double>(reward), next});
          obs = std::move(next);
          ++steps;

          if (steps > config.warmup && steps % config.train_every == 0 &&
              buffer.size() >= static_cast<std::size_t>(config.batch)) {
            const auto items = checked_sample(buffer, config.batch, update_rng);
            const auto b = static_cast<Eigen::Index>(items.size());
            Eigen::MatrixXd s(obs_dim, b), s_next(obs_dim, b);
            for (Eigen::Index j = 0; j < b; ++j) {
              s.col(j) = as_vector(items[static_cast<std::size_t>(j)]->observation);
              s_next.col(j) = as_vector(items[static_cast<std::size_t>(j)]->next_observation);
            }
            const Eigen::RowVectorXd next_max = target.forward(s_next).colwise().maxCoeff();
            Tape tape;
            const Eigen::MatrixXd values = q.forward(s, tape);
            Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(values.rows(), b);
            double loss = 0.0;
            for (Eigen::Index j = 0; j < b; ++j) {
              const auto& it = *items[static_cast<std::size_t>(j)];
              const double y = it.reward + loop.gamma * next_max[j];
              const double err = values(it.action, j) - y;
              loss += err * err;
              upstream(it.action, j) = 2.0 * err / static_cast<double>(b);
            }
            adam_step(optimizer, q, q.backward(tape, upstream));
            stats.critic_loss += loss / static_cast<double>(b);
            ++stats.updates;
          }
          if (steps % config.target_sync == 0) target = q;
        }
      }
      etas[m] = eta_sum / loop.trials;
      rates[m] = static_cast<double>(successes) / (static_cast<double>(loop.trials) * loop.horizon);
    }
    fill_returns(stats, etas, rates);
    stats.accepted = m_max;
    if (stats.updates > 0) stats.critic_loss /= static_cast<double>(stats.updates);
    stats.parameter_hash = hash_networks({&q});
    report.gradient_updates += stats.updates;
    report.episodes.push_back(std::move(stats));
  }
  return result;
}

// ---- DDPG -----------------------------------------------------------------

void DdpgConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ddpg config: ") + what);
  };
  require(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
  require(noise_std >= 0.0, "noise_std must be >= 0");
  require(replay_capacity >= 1 && batch >= 1 && warmup >= 0 && train_every >= 1,
          "buffer and schedule sizes must be positive");
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.sizes() != online.sizes()) throw std::invalid_argument("soft_update: network shapes differ");
  auto& p = target.parameters_for_update();
  p = tau * online.parameters() + (1.0 - tau) * p;
}

DdpgResult train_ddpg(const EnvironmentFactory& factory, const ParameterDistribution& train, const PpoConfig& loop,
                      const DdpgConfig& config, std::uint64_t seed) {
  loop.validate();
  config.validate();
  train.validate();
  const ActionSpace space{factory.relay_count(), factory.max_power()};
  const auto obs_dim = static_cast<Eigen::Index>(factory.observation_size());
  Rng init = make_rng(seed, {kInitStream});
  Rng sampler = make_rng(seed, {kSampleStream});
  Rng update_rng = make_rng(seed, {kUpdateStream});
  Rng explore = make_rng(seed, {kExploreStream});

  DdpgResult result{Mlp::standard(static_cast<int>(obs_dim), 2), Mlp::standard(static_cast<int>(obs_dim) + 2, 1),
                    space, {}};
  Mlp& actor = result.actor;
  Mlp& critic = result.critic;
  actor.initialize(init);
  critic.initialize(init);
  Mlp actor_target = actor;
  Mlp critic_target = critic;
  AdamState actor_opt(loop.actor_lr);
  AdamState critic_opt(loop.critic_lr);
  ReplayBuffer buffer(config.replay_capacity);
  auto& report = result.report;
  report.method = "ddpg";
  report.seed = seed;

  std::normal_distribution<double> noise(0.0, config.noise_std);
  long steps = 0;
  const auto m_max = static_cast<std::size_t>(loop.parameters_per_episode);

  for (int u = 0; u < loop.episodes; ++u) {
    EpisodeStats stats;
    stats.episode = u;
    stats.parameters = sample_parameters(train, m_max, sampler);
    std::vector<double> etas(m_max), rates(m_max);
    for (std::size_t m = 0; m < m_max; ++m) {
      auto env = factory.make(stats.parameters[m]);
      env->reset(derive_seed(seed, {kRolloutStream, static_cast<std::uint64_t>(u), m}));
      std::vector<double> obs = env->observe();
      double eta_sum = 0.0;
      long successes = 0;
      for (int l = 0; l < loop.trials; ++l) {
        double discount = 1.0;
        for (int t = 0; t < loop.horizon; ++t) {
          const Eigen::VectorXd out = actor.forward(as_vector(obs));
          std::array<double, 2> z{};
          for (int i = 0; i < 2; ++i) z[i] = std::clamp(std::tanh(out[i]) + noise(explore), -1.0, 1.0);
          const int reward = env->step(space.decode(z));
          std::vector<double> next = env->observe();
          eta_sum += discount * reward;
          discount *= loop.gamma;
          successes += reward;
          buffer.push(ReplayItem{obs, 0, z, static_cast<double>(reward), next});
          obs = std::move(next);
          ++steps;

          if (steps > config.warmup && steps % config.train_every == 0 &&
              buffer.size() >= static_cast<std::size_t>(config.batch)) {
            const auto items = checked_sample(buffer, config.batch, update_rng);
            const auto b = static_cast<Eigen::Index>(items.size());
            const double scale = 1.0 / static_cast<double>(b);
            Eigen::MatrixXd s(obs_dim, b), s_next(obs_dim, b), sa(obs_dim + 2, b), sa_next(obs_dim + 2, b);
            for (Eigen::Index j = 0; j < b; ++j) {
              const auto& it = *items[static_cast<std::size_t>(j)];
              s.col(j) = as_vector(it.observation);
              s_next.col(j) = as_vector(it.next_observation);
              sa.col(j).head(obs_dim) = s.col(j);
              sa.col(j).tail(2) << it.z[0], it.z[1];
            }
            sa_next.topRows(obs_dim) = s_next;
            sa_next.bottomRows(2) = actor_target.forward(s_next).array().tanh().matrix();
            const Eigen::RowVectorXd q_next = critic_target.forward(sa_next);

            Tape critic_tape;
            const Eigen::RowVectorXd q = critic.forward(sa, critic_tape);
            Eigen::RowVectorXd critic_up(b);
            double loss = 0.0;
            for (Eigen::Index j = 0; j < b; ++j) {
              const double err = q[j] - (items[static_cast<std::size_t>(j)]->reward + loop.gamma * q_next[j]);
              loss += err * err;
              critic_up[j] = 2.0 * err * scale;
            }
            adam_step(critic_opt, critic, critic.backward(critic_tape, critic_up));

            Tape actor_tape;
            const Eigen::MatrixXd z_batch = actor.forward(s, actor_tape).array().tanh().matrix();
            Eigen::MatrixXd sa_pi(obs_dim + 2, b);
            sa_pi.topRows(obs_dim) = s;
            sa_pi.bottomRows(2) = z_batch;
            Tape pi_tape;
            const Eigen::RowVectorXd q_pi = critic.forward(sa_pi, pi_tape);
            Eigen::MatrixXd input_grad;
            critic.backward(pi_tape, Eigen::RowVectorXd::Constant(b, -scale), &input_grad);
            const Eigen::MatrixXd d_out =
                input_grad.bottomRows(2).array() * (1.0 - z_batch.array().square());
            adam_step(actor_opt, actor, actor.backward(actor_tape, d_out));

            soft_update(critic_target, critic, config.tau);
            soft_update(actor_target, actor, config.tau);
            stats.critic_loss += loss * scale;
            stats.actor_objective += q_pi.mean();
            ++stats.updates;
          }
        }
      }
      etas[m] = eta_sum / loop.trials;
      rates[m] = static_cast<double>(successes) / (static_cast<double>(loop.trials) * loop.horizon);
    }
    fill_returns(stats, etas, rates);
    stats.accepted = m_max;
    if (stats.updates > 0) {
      stats.critic_loss /= static_cast<double>(stats.updates);
      stats.actor_objective /= static_cast<double>(stats.updates);
    }
    stats.parameter_hash = hash_networks({&actor, &critic});
    report.gradient_updates += stats.updates;
    report.episodes.push_back(std::move(stats));
  }
  return result;
}

}  // namespace relaynet
