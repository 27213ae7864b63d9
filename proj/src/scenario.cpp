#include "relaynet/scenario.hpp"

#include <fstream>
#include <stdexcept>

namespace relaynet {

using nlohmann::json;

namespace {

bool compatible(const json& fallback, const json& value) {
  if (fallback.is_number_integer()) return value.is_number_integer();
  if (fallback.is_number()) return value.is_number();
  return fallback.type() == value.type();
}

void merge_into(json& base, const json& doc, const std::string& path) {
  if (!doc.is_object()) throw std::invalid_argument("scenario: " + (path.empty() ? "document" : path) + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("scenario: unknown key " + field);
    json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, field);
    } else if (!compatible(slot, value)) {
      throw std::invalid_argument("scenario: key " + field + " expects " + std::string(slot.type_name()) +
                                  ", got " + value.type_name());
    } else {
      slot = value;
    }
  }
}

template <class T>
T get(const json& doc, const char* section, const char* key) {
  try {
    return doc.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: key ") + section + "." + key + ": " + e.what());
  }
}

template <class T>
T get(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: key ") + key + ": " + e.what());
  }
}

}  // namespace

void Scenario::validate() const {
  network.validate();
  ppo.validate();
  dqn.validate();
  ddpg.validate();
  if (thresholds.empty()) throw std::invalid_argument("scenario: thresholds must not be empty");
  for (double t : thresholds) {
    if (!(t > 0.0)) throw std::invalid_argument("scenario: thresholds must be > 0");
  }
  if (geometry.locations < 1) throw std::invalid_argument("scenario: geometry.locations must be >= 1");
  if (train_locations.empty() || train_thresholds.empty()) {
    throw std::invalid_argument("scenario: train.locations and train.thresholds must not be empty");
  }
  for (int l : train_locations) {
    if (l < 0 || l >= geometry.locations) throw std::invalid_argument("scenario: train.locations index out of range");
  }
  for (int t : train_thresholds) {
    if (t < 0 || t >= static_cast<int>(thresholds.size())) {
      throw std::invalid_argument("scenario: train.thresholds index out of range");
    }
  }
  if (evaluation.episodes < 1 || evaluation.horizon < 1) {
    throw std::invalid_argument("scenario: evaluation.episodes and evaluation.horizon must be >= 1");
  }
  if (seeds.empty()) throw std::invalid_argument("scenario: seeds must not be empty");
}

json to_json(const Scenario& s) {
  json doc;
  doc["network"] = {
      {"relays", s.network.relays},
      {"source_antennas", s.network.source_antennas},
      {"destination_antennas", s.network.destination_antennas},
      {"path_loss_constant", s.network.path_loss_constant},
      {"path_loss_exponent", s.network.path_loss_exponent},
      {"noise_power", s.network.noise_power},
      {"max_power", s.network.max_power},
      {"destination_threshold", s.network.destination_threshold},
      {"outage_mode", std::string(to_string(s.outage_mode))},
  };
  doc["geometry"] = {
      {"destination_distance", s.geometry.destination_distance},
      {"locations", s.geometry.locations},
      {"x_min", s.geometry.x_min},
      {"x_max", s.geometry.x_max},
      {"y_half_width", s.geometry.y_half_width},
      {"seed", s.geometry.seed},
  };
  doc["thresholds"] = s.thresholds;
  doc["markov"] = {
      {"states", s.markov.states},
      {"correlation", s.markov.correlation},
      {"sample_budget", s.markov.sample_budget},
      {"seed", s.markov.seed},
  };
  doc["observation"] = std::string(to_string(s.observation));
  doc["train"] = {{"locations", s.train_locations}, {"thresholds", s.train_thresholds}};
  doc["ppo"] = {
      {"gamma", s.ppo.gamma},
      {"clip", s.ppo.clip},
      {"zeta", s.ppo.zeta},
      {"epochs", s.ppo.epochs},
      {"minibatch", s.ppo.minibatch},
      {"episodes", s.ppo.episodes},
      {"parameters_per_episode", s.ppo.parameters_per_episode},
      {"trials", s.ppo.trials},
      {"horizon", s.ppo.horizon},
      {"actor_lr", s.ppo.actor_lr},
      {"critic_lr", s.ppo.critic_lr},
  };
  doc["dqn"] = {
      {"power_levels", s.dqn.power_levels},
      {"replay_capacity", s.dqn.replay_capacity},
      {"batch", s.dqn.batch},
      {"warmup", s.dqn.warmup},
      {"target_sync", s.dqn.target_sync},
      {"train_every", s.dqn.train_every},
      {"learning_rate", s.dqn.learning_rate},
      {"epsilon_start", s.dqn.epsilon_start},
      {"epsilon_end", s.dqn.epsilon_end},
      {"epsilon_decay_steps", s.dqn.epsilon_decay_steps},
  };
  doc["ddpg"] = {
      {"tau", s.ddpg.tau},
      {"noise_std", s.ddpg.noise_std},
      {"replay_capacity", s.ddpg.replay_capacity},
      {"batch", s.ddpg.batch},
      {"warmup", s.ddpg.warmup},
      {"train_every", s.ddpg.train_every},
  };
  doc["evaluation"] = {
      {"episodes", s.evaluation.episodes},
      {"horizon", s.evaluation.horizon},
      {"seed", s.evaluation.seed},
  };
  doc["seeds"] = s.seeds;
  return doc;
}

Scenario scenario_from_json(const json& doc) {
  json merged = to_json(Scenario{});
  merge_into(merged, doc, "");

  Scenario s;
  auto& n = s.network;
  n.relays = get<int>(merged, "network", "relays");
  n.source_antennas = get<int>(merged, "network", "source_antennas");
  n.destination_antennas = get<int>(merged, "network", "destination_antennas");
  n.path_loss_constant = get<double>(merged, "network", "path_loss_constant");
  n.path_loss_exponent = get<double>(merged, "network", "path_loss_exponent");
  n.noise_power = get<double>(merged, "network", "noise_power");
  n.max_power = get<double>(merged, "network", "max_power");
  n.destination_threshold = get<double>(merged, "network", "destination_threshold");
  s.outage_mode = parse_outage_mode(get<std::string>(merged, "network", "outage_mode"));

  auto& g = s.geometry;
  g.destination_distance = get<double>(merged, "geometry", "destination_distance");
  g.locations = get<int>(merged, "geometry", "locations");
  g.x_min = get<double>(merged, "geometry", "x_min");
  g.x_max = get<double>(merged, "geometry", "x_max");
  g.y_half_width = get<double>(merged, "geometry", "y_half_width");
  g.seed = get<std::uint64_t>(merged, "geometry", "seed");

  s.thresholds = get<std::vector<double>>(merged, "thresholds");

  s.markov.states = get<int>(merged, "markov", "states");
  s.markov.correlation = get<double>(merged, "markov", "correlation");
  s.markov.sample_budget = get<std::size_t>(merged, "markov", "sample_budget");
  s.markov.seed = get<std::uint64_t>(merged, "markov", "seed");
  s.observation = parse_observation_encoding(get<std::string>(merged, "observation"));

  s.train_locations = get<std::vector<int>>(merged, "train", "locations");
  s.train_thresholds = get<std::vector<int>>(merged, "train", "thresholds");

  auto& p = s.ppo;
  p.gamma = get<double>(merged, "ppo", "gamma");
  p.clip = get<double>(merged, "ppo", "clip");
  p.zeta = get<double>(merged, "ppo", "zeta");
  p.epochs = get<int>(merged, "ppo", "epochs");
  p.minibatch = get<int>(merged, "ppo", "minibatch");
  p.episodes = get<int>(merged, "ppo", "episodes");
  p.parameters_per_episode = get<int>(merged, "ppo", "parameters_per_episode");
  p.trials = get<int>(merged, "ppo", "trials");
  p.horizon = get<int>(merged, "ppo", "horizon");
  p.actor_lr = get<double>(merged, "ppo", "actor_lr");
  p.critic_lr = get<double>(merged, "ppo", "critic_lr");

  auto& q = s.dqn;
  q.power_levels = get<int>(merged, "dqn", "power_levels");
  q.replay_capacity = get<std::size_t>(merged, "dqn", "replay_capacity");
  q.batch = get<int>(merged, "dqn", "batch");
  q.warmup = get<int>(merged, "dqn", "warmup");
  q.target_sync = get<int>(merged, "dqn", "target_sync");
  q.train_every = get<int>(merged, "dqn", "train_every");
  q.learning_rate = get<double>(merged, "dqn", "learning_rate");
  q.epsilon_start = get<double>(merged, "dqn", "epsilon_start");
  q.epsilon_end = get<double>(merged, "dqn", "epsilon_end");
  q.epsilon_decay_steps = get<long>(merged, "dqn", "epsilon_decay_steps");

  auto& d = s.ddpg;
  d.tau = get<double>(merged, "ddpg", "tau");
  d.noise_std = get<double>(merged, "ddpg", "noise_std");
  d.replay_capacity = get<std::size_t>(merged, "ddpg", "replay_capacity");
  d.batch = get<int>(merged, "ddpg", "batch");
  d.warmup = get<int>(merged, "ddpg", "warmup");
  d.train_every = get<int>(merged, "ddpg", "train_every");

  s.evaluation.episodes = get<int>(merged, "evaluation", "episodes");
  s.evaluation.horizon = get<int>(merged, "evaluation", "horizon");
  s.evaluation.seed = get<std::uint64_t>(merged, "evaluation", "seed");
  s.seeds = get<std::vector<std::uint64_t>>(merged, "seeds");

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("scenario file " + path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' must look like key.path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "': empty key segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw std::invalid_argument("override '" + assignment + "': " + key + " is not a section");
    node = &child;
    start = dot + 1;
  }
}

std::uint64_t config_hash(const Scenario& scenario) { return fnv1a(to_json(scenario).dump()); }

std::shared_ptr<const RelayWorld> make_world(const Scenario& scenario) {
  scenario.validate();
  auto candidates = generate_candidates(scenario.geometry, scenario.network.relays, scenario.thresholds);
  auto model = std::make_shared<const MarkovChannelModel>(
      build_markov_model(scenario.network, candidates, scenario.markov));
  auto world = std::make_shared<RelayWorld>();
  world->network = scenario.network;
  world->grid = ParameterGrid(std::move(candidates));
  world->model = std::move(model);
  world->mode = scenario.outage_mode;
  world->encoding = scenario.observation;
  return world;
}

ParameterDistribution train_distribution(const Scenario& scenario, const ParameterGrid& grid) {
  return ParameterDistribution::uniform(grid.subset(scenario.train_locations, scenario.train_thresholds));
}

}  // namespace relaynet
