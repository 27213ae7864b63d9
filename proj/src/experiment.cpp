#include "relaynet/experiment.hpp"

#include <ostream>
#include <stdexcept>

namespace relaynet {

namespace {

void write_values(std::ostream& out, const std::string& label, const std::vector<double>& values) {
  out << label;
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

std::vector<double> read_list(TextReader& reader, const std::vector<std::string>& prefix) {
  std::string field;
  for (const auto& p : prefix) field += (field.empty() ? "" : ".") + p;
  const std::string line = reader.raw();
  const auto tokens = split_whitespace(line);
  if (tokens.size() < prefix.size() + 1) throw ParseError("field " + field + ": missing count");
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (tokens[i] != prefix[i]) throw ParseError("expected field " + field + ", found '" + line + "'");
  }
  const auto count = static_cast<std::size_t>(parse_integer(tokens[prefix.size()], field + ".count"));
  if (tokens.size() != prefix.size() + 1 + count) throw ParseError("field " + field + ": wrong number of values");
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(parse_double(tokens[prefix.size() + 1 + i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void write_list(std::ostream& out, const std::string& label, const std::vector<double>& values) {
  out << label << ' ' << values.size();
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "robust") return Method::Robust;
  if (name == "ppo") return Method::Ppo;
  if (name == "ddpg") return Method::Ddpg;
  if (name == "dqn") return Method::Dqn;
  if (name == "random") return Method::Random;
  throw std::invalid_argument("unknown method '" + std::string(name) + "' (expected robust, ppo, ddpg, dqn, random)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Robust: return "robust";
    case Method::Ppo: return "ppo";
    case Method::Ddpg: return "ddpg";
    case Method::Dqn: return "dqn";
    case Method::Random: return "random";
  }
  return "random";
}

void save_checkpoint(std::ostream& out, const TrainedModel& model) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "method " << to_string(model.method) << '\n';
  out << "seed " << model.seed << '\n';
  out << "config_hash " << to_hex(model.config_hash) << '\n';
  out << "relays " << model.relays << '\n';
  write_values(out, "max_power", {model.max_power});
  out << "power_levels " << model.power_levels << '\n';
  out << "candidates " << model.candidates.size() << '\n';
  for (std::size_t k = 0; k < model.candidates.size(); ++k) {
    const std::string tag = "relay" + std::to_string(k);
    write_list(out, tag + " source_distance", model.candidates[k].source_distance);
    write_list(out, tag + " destination_distance", model.candidates[k].destination_distance);
    write_list(out, tag + " thresholds", model.candidates[k].thresholds);
  }
  out << "networks " << model.networks.size();
  for (const auto& entry : model.networks) out << ' ' << entry.first;
  out << '\n';
  for (const auto& [name, net] : model.networks) save_network(out, name, net);
  out << "end\n";
}

TrainedModel load_checkpoint(std::istream& in) {
  TextReader reader(in);
  const std::string header_line = reader.raw();
  const auto header = split_whitespace(header_line);
  if (header.size() != 2 || header[0] != kCheckpointMagic) throw ParseError("not a checkpoint file");
  if (parse_integer(header[1], "version") != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::string(header[1]) + " (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  }
  TrainedModel m;
  try {
    m.method = parse_method(reader.text("method"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("field method: ") + e.what());
  }
  m.seed = static_cast<std::uint64_t>(reader.integer("seed"));
  const std::string hash = reader.text("config_hash");
  try {
    std::size_t used = 0;
    m.config_hash = std::stoull(hash, &used, 16);
    if (used != hash.size()) throw std::invalid_argument(hash);
  } catch (const std::exception&) {
    throw ParseError("field config_hash: malformed value '" + hash + "'");
  }
  m.relays = static_cast<int>(reader.integer("relays"));
  m.max_power = reader.values({"max_power"}, 1)[0];
  m.power_levels = static_cast<int>(reader.integer("power_levels"));
  const auto relays = reader.integer("candidates");
  if (relays < 0) throw ParseError("field candidates: negative count");
  for (long long k = 0; k < relays; ++k) {
    const std::string tag = "relay" + std::to_string(k);
    RelayCandidates c;
    c.source_distance = read_list(reader, {tag, "source_distance"});
    c.destination_distance = read_list(reader, {tag, "destination_distance"});
    c.thresholds = read_list(reader, {tag, "thresholds"});
    m.candidates.push_back(std::move(c));
  }
  const std::string names_line = reader.text("networks");
  const auto names = split_whitespace(names_line);
  if (names.empty()) throw ParseError("field networks: malformed count");
  const auto count = parse_integer(names[0], "networks");
  if (count < 0 || names.size() != static_cast<std::size_t>(count) + 1) {
    throw ParseError("field networks: expected " + std::string(names[0]) + " names");
  }
  for (std::size_t i = 1; i < names.size(); ++i) {
    const std::string name(names[i]);
    m.networks.emplace(name, load_network(reader, name));
  }
  if (reader.raw() != "end") throw ParseError("field end: missing checkpoint terminator");
  return m;
}

std::unique_ptr<Policy> make_policy(const TrainedModel& model) {
  const ActionSpace space{model.relays, model.max_power};
  auto network = [&](const std::string& name) {
    const auto it = model.networks.find(name);
    if (it == model.networks.end()) throw std::runtime_error("checkpoint lacks network '" + name + "'");
    return it->second;
  };
  switch (model.method) {
    case Method::Robust:
    case Method::Ppo:
      return std::make_unique<GaussianPolicy>(network("actor"), space, true);
    case Method::Ddpg:
      return std::make_unique<DeterministicPolicy>(network("actor"), space);
    case Method::Dqn:
      return std::make_unique<GreedyQPolicy>(network("q"),
                                             DiscreteActions{model.relays, model.power_levels, model.max_power});
    case Method::Random:
      return std::make_unique<RandomPolicy>(model.relays, model.max_power);
  }
  throw std::logic_error("make_policy: unhandled method");
}

TrainOutcome train_method(const Scenario& scenario, const RelayEnvironmentFactory& factory, Method method,
                          std::uint64_t seed, int workers) {
  const auto& grid = factory.world().grid;
  const auto train = train_distribution(scenario, grid);
  TrainOutcome out;
  auto& m = out.model;
  m.method = method;
  m.seed = seed;
  m.config_hash = config_hash(scenario);
  m.candidates = grid.candidates();
  m.relays = factory.relay_count();
  m.max_power = factory.max_power();
  switch (method) {
    case Method::Robust:
    case Method::Ppo: {
      auto result = method == Method::Robust ? train_robust(factory, train, scenario.ppo, seed, workers)
                                             : train_ppo(factory, train, scenario.ppo, seed, workers);
      m.networks.emplace("actor", std::move(result.agent.actor));
      m.networks.emplace("critic", std::move(result.agent.critic));
      out.report = std::move(result.report);
      break;
    }
    case Method::Ddpg: {
      auto result = train_ddpg(factory, train, scenario.ppo, scenario.ddpg, seed);
      m.networks.emplace("actor", std::move(result.actor));
      m.networks.emplace("critic", std::move(result.critic));
      out.report = std::move(result.report);
      break;
    }
    case Method::Dqn: {
      auto result = train_dqn(factory, train, scenario.ppo, scenario.dqn, seed);
      m.power_levels = scenario.dqn.power_levels;
      m.networks.emplace("q", std::move(result.q));
      out.report = std::move(result.report);
      break;
    }
    case Method::Random:
      out.report = train_random(factory, train, scenario.ppo, seed);
      break;
  }
  return out;
}

EvalProtocol make_protocol(const Scenario& scenario, const ParameterGrid& grid) {
  EvalProtocol p;
  p.train_ids = grid.subset(scenario.train_locations, scenario.train_thresholds);
  p.test_ids.resize(grid.size());
  for (std::size_t id = 0; id < grid.size(); ++id) p.test_ids[id] = id;
  p.episodes = scenario.evaluation.episodes;
  p.horizon = scenario.evaluation.horizon;
  p.seed = scenario.evaluation.seed;
  return p;
}

void check_grid(const TrainedModel& model, const ParameterGrid& grid) {
  if (!(model.candidates == grid.candidates())) {
    throw std::runtime_error("checkpoint was trained on a different parameter grid than the scenario describes");
  }
}

void write_manifest(std::ostream& out, const Scenario& scenario, const ParameterGrid& grid, Method method,
                    std::uint64_t seed, const EvalProtocol& protocol) {
  out << "config_hash " << to_hex(config_hash(scenario)) << '\n';
  out << "method " << to_string(method) << '\n';
  out << "seed " << seed << '\n';
  out << "evaluation_seed " << protocol.seed << '\n';
  out << "grid relays " << grid.relays() << " locations " << grid.locations() << " thresholds " << grid.thresholds()
      << " size " << grid.size() << '\n';
  for (std::size_t k = 0; k < grid.candidates().size(); ++k) {
    const auto& c = grid.candidates()[k];
    const std::string tag = "relay" + std::to_string(k);
    write_values(out, tag + " source_distance", c.source_distance);
    write_values(out, tag + " destination_distance", c.destination_distance);
    write_values(out, tag + " thresholds", c.thresholds);
  }
  auto ids = [&](const char* label, const std::vector<std::size_t>& v) {
    out << label << ' ' << v.size();
    for (auto id : v) out << ' ' << id;
    out << '\n';
  };
  ids("train_ids", protocol.train_ids);
  ids("unseen_ids", protocol.unseen_ids());
}

}  // namespace relaynet
