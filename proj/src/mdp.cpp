#include "relaynet/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace relaynet {

Action decode_action(double relay_value, double power_value, int relays, double max_power) {
  if (!std::isfinite(relay_value) || !std::isfinite(power_value)) {
    throw InvalidAction("decode_action: non-finite policy output");
  }
  if (relays < 1 || !(max_power > 0)) throw std::invalid_argument("decode_action: malformed action space");
  const double upper = std::nextafter(static_cast<double>(relays + 1), 0.0);
  const double relay = std::floor(std::clamp(relay_value, 1.0, upper));
  return Action{static_cast<int>(relay), std::clamp(power_value, 0.0, max_power)};
}

void check_action(const Action& action, int relays, double max_power) {
  if (action.relay < 1 || action.relay > relays) {
    throw InvalidAction("relay index " + std::to_string(action.relay) + " outside [1, " + std::to_string(relays) + "]");
  }
  if (!std::isfinite(action.source_power) || action.source_power < 0.0 || action.source_power > max_power) {
    throw InvalidAction("source power " + format_double(action.source_power) + " outside [0, " +
                        format_double(max_power) + "]");
  }
}

ParameterDistribution ParameterDistribution::uniform(std::vector<std::size_t> ids) {
  ParameterDistribution d;
  d.weights.assign(ids.size(), ids.empty() ? 0.0 : 1.0 / static_cast<double>(ids.size()));
  d.ids = std::move(ids);
  return d;
}

void ParameterDistribution::validate() const {
  if (ids.empty()) throw std::invalid_argument("parameter distribution: empty grid");
  if (ids.size() != weights.size()) throw std::invalid_argument("parameter distribution: ids/weights size mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("parameter distribution: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("parameter distribution: weights do not sum to 1");
}

std::vector<std::size_t> sample_parameters(const ParameterDistribution& dist, std::size_t count, Rng& rng) {
  dist.validate();
  if (count < 1) throw std::invalid_argument("sample_parameters: count must be >= 1");
  std::discrete_distribution<std::size_t> pick(dist.weights.begin(), dist.weights.end());
  std::vector<std::size_t> out(count);
  for (auto& id : out) id = dist.ids[pick(rng)];
  return out;
}

double discounted_return(std::span<const int> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discounted_return: gamma must be in [0, 1)");
  double total = 0.0;
  double discount = 1.0;
  for (int r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

double discounted_return(std::span<const Trajectory> trials, double gamma) {
  if (trials.empty()) throw std::invalid_argument("discounted_return: need at least one trial");
  double total = 0.0;
  std::vector<int> rewards;
  for (const auto& trial : trials) {
    rewards.clear();
    for (const auto& s : trial.steps) rewards.push_back(s.reward);
    total += discounted_return(std::span<const int>(rewards), gamma);
  }
  return total / static_cast<double>(trials.size());
}

void write_trajectory_log(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& traj : trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& s = traj.steps[t];
      out << "step " << traj.parameter_id << ' ' << traj.seed << ' ' << t << ' ' << format_double(s.raw_action[0])
          << ' ' << format_double(s.raw_action[1]) << ' ' << s.action.relay << ' '
          << format_double(s.action.source_power) << ' ' << s.reward << ' ' << format_double(s.log_prob) << ' '
          << s.observation.size();
      for (double v : s.observation) out << ' ' << format_double(v);
      for (double v : s.next_observation) out << ' ' << format_double(v);
      out << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectory_log(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_whitespace(line);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (tok.size() < 11 || tok[0] != "step") throw ParseError(where + ": not a trajectory step");
    const auto param = static_cast<std::size_t>(parse_integer(tok[1], where + ".parameter"));
    const auto seed = static_cast<std::uint64_t>(std::stoull(std::string(tok[2])));
    const auto t = parse_integer(tok[3], where + ".t");
    const auto n = static_cast<std::size_t>(parse_integer(tok[10], where + ".observation_size"));
    if (tok.size() != 11 + 2 * n) throw ParseError(where + ": observation length mismatch");
    Transition s;
    s.raw_action = {parse_double(tok[4], where + ".raw0"), parse_double(tok[5], where + ".raw1")};
    s.action.relay = static_cast<int>(parse_integer(tok[6], where + ".relay"));
    s.action.source_power = parse_double(tok[7], where + ".power");
    s.reward = static_cast<int>(parse_integer(tok[8], where + ".reward"));
    s.log_prob = parse_double(tok[9], where + ".log_prob");
    for (std::size_t i = 0; i < n; ++i) s.observation.push_back(parse_double(tok[11 + i], where + ".obs"));
    for (std::size_t i = 0; i < n; ++i) s.next_observation.push_back(parse_double(tok[11 + n + i], where + ".next"));
    if (t == 0 || out.empty() || out.back().parameter_id != param || out.back().seed != seed) {
      out.push_back(Trajectory{param, seed, {}});
    }
    out.back().steps.push_back(std::move(s));
  }
  return out;
}

}  // namespace relaynet
