#include "relaynet/policy.hpp"

#include <cmath>

namespace relaynet {

std::array<double, 2> ActionSpace::to_physical(const std::array<double, 2>& z) const {
  return {1.0 + relays * (z[0] + 1.0) / 2.0, max_power * (z[1] + 1.0) / 2.0};
}

Action ActionSpace::decode(const std::array<double, 2>& z) const {
  const auto raw = to_physical(z);
  return decode_action(raw[0], raw[1], relays, max_power);
}

void ActionSpace::write_features(const Action& action, double* out) const {
  for (int k = 0; k < relays; ++k) out[k] = (k + 1 == action.relay) ? 1.0 : 0.0;
  out[relays] = action.source_power / max_power;
}

Action random_policy(int relays, double max_power, Rng& rng) {
  if (relays < 1 || !(max_power > 0)) throw std::invalid_argument("random_policy: malformed action space");
  std::uniform_int_distribution<int> relay(1, relays);
  std::uniform_real_distribution<double> power(0.0, max_power);
  const int r = relay(rng);
  return Action{r, power(rng)};
}

Action GaussianPolicy::act(const std::vector<double>& observation, Rng& rng) const {
  const auto head = GaussianHead::from_output(actor_.forward(as_vector(observation)));
  if (greedy_) return space_.decode(head.mean);
  return space_.decode(log_prob_and_sample(head, rng).first);
}

Action DeterministicPolicy::act(const std::vector<double>& observation, Rng&) const {
  const Eigen::VectorXd out = actor_.forward(as_vector(observation));
  return space_.decode({std::tanh(out[0]), std::tanh(out[1])});
}

Action DiscreteActions::action(int index) const {
  if (index < 0 || index >= size()) throw InvalidAction("discrete action index out of range");
  const int level = index % levels;
  return Action{index / levels + 1, max_power * level / (levels - 1)};
}

Action GreedyQPolicy::act(const std::vector<double>& observation, Rng&) const {
  const Eigen::VectorXd q = q_.forward(as_vector(observation));
  Eigen::Index best = 0;
  q.maxCoeff(&best);
  return actions_.action(static_cast<int>(best));
}

}  // namespace relaynet
