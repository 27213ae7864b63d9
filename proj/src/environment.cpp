#include "relaynet/environment.hpp"

#include <algorithm>
#include <string>

#include "relaynet/robust.hpp"

namespace relaynet {

namespace {

int draw_categorical(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    cumulative += probs[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace

bool operator==(const RelayCandidates& a, const RelayCandidates& b) {
  return a.source_distance == b.source_distance && a.destination_distance == b.destination_distance &&
         a.thresholds == b.thresholds;
}

bool operator==(const ParameterGrid& a, const ParameterGrid& b) { return a.candidates_ == b.candidates_; }

ParameterGrid::ParameterGrid(std::vector<RelayCandidates> candidates) : candidates_(std::move(candidates)) {
  if (candidates_.empty()) throw std::invalid_argument("parameter grid: no relays");
  locations_ = static_cast<int>(candidates_.front().source_distance.size());
  thresholds_ = static_cast<int>(candidates_.front().thresholds.size());
  if (locations_ < 1 || thresholds_ < 1) throw std::invalid_argument("parameter grid: empty candidate set");
  for (const auto& c : candidates_) {
    if (static_cast<int>(c.source_distance.size()) != locations_ ||
        static_cast<int>(c.destination_distance.size()) != locations_ ||
        static_cast<int>(c.thresholds.size()) != thresholds_) {
      throw std::invalid_argument("parameter grid: all relays need equally sized candidate sets");
    }
    for (std::size_t l = 0; l < c.source_distance.size(); ++l) {
      if (!(c.source_distance[l] > 0) || !(c.destination_distance[l] > 0)) {
        throw std::invalid_argument("parameter grid: distances must be > 0");
      }
    }
    for (double t : c.thresholds) {
      if (!(t > 0)) throw std::invalid_argument("parameter grid: thresholds must be > 0");
    }
  }
  const auto radix = static_cast<std::size_t>(locations_ * thresholds_);
  size_ = 1;
  for (std::size_t k = 0; k < candidates_.size(); ++k) size_ *= radix;
}

EnvironmentParameter ParameterGrid::at(std::size_t id) const {
  if (id >= size_) throw std::out_of_range("parameter id " + std::to_string(id) + " outside grid");
  EnvironmentParameter p;
  p.id = id;
  const auto radix = static_cast<std::size_t>(locations_ * thresholds_);
  std::size_t rest = id;
  for (const auto& c : candidates_) {
    const auto digit = rest % radix;
    rest /= radix;
    const int loc = static_cast<int>(digit / thresholds_);
    const int thr = static_cast<int>(digit % thresholds_);
    p.location.push_back(loc);
    p.threshold.push_back(thr);
    p.source_distance.push_back(c.source_distance[loc]);
    p.destination_distance.push_back(c.destination_distance[loc]);
    p.relay_threshold.push_back(c.thresholds[thr]);
  }
  return p;
}

std::size_t ParameterGrid::id_of(std::span<const int> location, std::span<const int> threshold) const {
  if (location.size() != candidates_.size() || threshold.size() != candidates_.size()) {
    throw std::invalid_argument("id_of: one location and threshold index per relay required");
  }
  const auto radix = static_cast<std::size_t>(locations_ * thresholds_);
  std::size_t id = 0;
  for (std::size_t k = candidates_.size(); k-- > 0;) {
    if (location[k] < 0 || location[k] >= locations_ || threshold[k] < 0 || threshold[k] >= thresholds_) {
      throw std::out_of_range("id_of: index outside candidate set");
    }
    id = id * radix + static_cast<std::size_t>(location[k] * thresholds_ + threshold[k]);
  }
  return id;
}

std::vector<std::size_t> ParameterGrid::subset(const std::vector<int>& locs, const std::vector<int>& thrs) const {
  auto contains = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
  for (int l : locs) {
    if (l < 0 || l >= locations_) throw std::out_of_range("subset: location index " + std::to_string(l));
  }
  for (int t : thrs) {
    if (t < 0 || t >= thresholds_) throw std::out_of_range("subset: threshold index " + std::to_string(t));
  }
  std::vector<std::size_t> out;
  for (std::size_t id = 0; id < size_; ++id) {
    const auto p = at(id);
    bool ok = true;
    for (std::size_t k = 0; k < p.location.size() && ok; ++k) {
      ok = contains(locs, p.location[k]) && contains(thrs, p.threshold[k]);
    }
    if (ok) out.push_back(id);
  }
  return out;
}

ObservationEncoding parse_observation_encoding(std::string_view name) {
  if (name == "onehot") return ObservationEncoding::OneHot;
  if (name == "index") return ObservationEncoding::Index;
  throw std::invalid_argument("unknown observation encoding '" + std::string(name) + "' (expected onehot|index)");
}

std::string_view to_string(ObservationEncoding encoding) {
  return encoding == ObservationEncoding::OneHot ? "onehot" : "index";
}

std::size_t observation_width(ObservationEncoding encoding, int links, int states) {
  return encoding == ObservationEncoding::OneHot ? static_cast<std::size_t>(links * states)
                                                 : static_cast<std::size_t>(links);
}

std::vector<double> encode_observation(const ChannelState& state, ObservationEncoding encoding, int states) {
  const int links = static_cast<int>(state.size());
  std::vector<double> out(observation_width(encoding, links, states), 0.0);
  for (int l = 0; l < links; ++l) {
    if (state[l] < 0 || state[l] >= states) throw std::out_of_range("encode_observation: state index out of range");
    if (encoding == ObservationEncoding::OneHot) {
      out[static_cast<std::size_t>(l * states + state[l])] = 1.0;
    } else {
      out[l] = 2.0 * state[l] / (states - 1) - 1.0;
    }
  }
  return out;
}

ChannelState advance_state(const MarkovChannelModel& model, const EnvironmentParameter& param,
                           const ChannelState& state, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelState next(state.size());
  for (std::size_t link = 0; link < state.size(); ++link) {
    const int loc = param.location.at(link / 2);
    next[link] = draw_categorical(model.row(static_cast<int>(link), loc, state[link]), unit(rng));
  }
  return next;
}

ChannelState sample_stationary_state(const MarkovChannelModel& model, const EnvironmentParameter& param, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChannelState s(static_cast<std::size_t>(model.link_count()));
  for (std::size_t link = 0; link < s.size(); ++link) {
    s[link] = draw_categorical(model.occupancy(static_cast<int>(link), param.location.at(link / 2)), unit(rng));
  }
  return s;
}

StepOutcome env_step(const MarkovChannelModel& model, const NetworkConfig& config,
                     const EnvironmentParameter& param, const ChannelState& state, const Action& action,
                     OutageMode mode, Rng& rng) {
  check_action(action, config.relays, config.max_power);
  if (static_cast<int>(state.size()) != 2 * config.relays || model.link_count() != 2 * config.relays) {
    throw std::invalid_argument("env_step: state does not match the network");
  }
  for (int s : state) {
    if (s < 0 || s >= model.states()) throw std::out_of_range("env_step: state index out of range");
  }
  const int k = action.relay - 1;
  const double relay_gain = model.representative(2 * k, state[2 * k]);
  const double dest_gain = model.representative(2 * k + 1, state[2 * k + 1]);
  StepOutcome out;
  out.relay_rate = mutual_information(action.source_power, relay_gain, config.noise_power);
  out.destination_rate = mutual_information(config.max_power - action.source_power, dest_gain, config.noise_power);
  out.reward = 1 - outage_indicator(out.relay_rate, out.destination_rate, param.relay_threshold.at(k),
                                    config.destination_threshold, mode);
  out.next_state = advance_state(model, param, state, rng);
  return out;
}

RelayEnvironment::RelayEnvironment(std::shared_ptr<const RelayWorld> world, EnvironmentParameter param)
    : world_(std::move(world)), param_(std::move(param)) {
  reset(0);
}

std::size_t RelayEnvironment::observation_size() const {
  return observation_width(world_->encoding, world_->model->link_count(), world_->model->states());
}

void RelayEnvironment::reset(std::uint64_t seed) {
  rng_.seed(seed);
  previous_ = sample_stationary_state(*world_->model, param_, rng_);
  current_ = advance_state(*world_->model, param_, previous_, rng_);
}

std::vector<double> RelayEnvironment::observe() const {
  return encode_observation(previous_, world_->encoding, world_->model->states());
}

int RelayEnvironment::step(const Action& action) {
  auto outcome = env_step(*world_->model, world_->network, param_, current_, action, world_->mode, rng_);
  previous_ = std::move(current_);
  current_ = std::move(outcome.next_state);
  return outcome.reward;
}

RelayEnvironmentFactory::RelayEnvironmentFactory(std::shared_ptr<const RelayWorld> world) : world_(std::move(world)) {
  if (!world_ || !world_->model) throw std::invalid_argument("relay environment factory: missing world");
  if (world_->model->link_count() != 2 * world_->network.relays ||
      world_->model->locations() != world_->grid.locations() || world_->grid.relays() != world_->network.relays) {
    throw std::invalid_argument("relay environment factory: model, grid and network disagree");
  }
}

std::unique_ptr<Environment> RelayEnvironmentFactory::make(std::size_t parameter_id) const {
  return std::make_unique<RelayEnvironment>(world_, world_->grid.at(parameter_id));
}

double RelayEnvironmentFactory::parameter_distance(std::size_t a, std::size_t b) const {
  return tv_distance_params(world_->grid.at(a), world_->grid.at(b), world_->grid);
}

std::size_t RelayEnvironmentFactory::observation_size() const {
  return observation_width(world_->encoding, world_->model->link_count(), world_->model->states());
}

}  // namespace relaynet
