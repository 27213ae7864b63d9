#include <doctest.h>

#include <map>
#include <set>

#include "relaynet/environment.hpp"
#include "relaynet/robust.hpp"
#include "relaynet/scenario.hpp"

using namespace relaynet;

namespace {

std::shared_ptr<const RelayWorld> small_world() {
  Scenario s;
  s.markov.sample_budget = 10000;
  return make_world(s);
}

EnvironmentParameter zero_thresholds(const RelayWorld& w) {
  auto p = w.grid.at(0);
  std::fill(p.relay_threshold.begin(), p.relay_threshold.end(), 0.0);
  return p;
}

}  // namespace

TEST_CASE("grid ids are mixed radix") {
  const auto w = small_world();
  const auto& g = w->grid;
  CHECK(g.size() == 125);
  for (std::size_t id : {0UL, 1UL, 17UL, 124UL}) {
    const auto p = g.at(id);
    CHECK(g.id_of(p.location, p.threshold) == id);
  }
  CHECK(g.at(1).location == std::vector<int>{1, 0, 0});
  CHECK(g.at(5).location == std::vector<int>{0, 1, 0});
  CHECK_THROWS_AS(g.at(125), std::out_of_range);
  CHECK(g.subset({1, 2, 3}, {0}).size() == 27);
}

TEST_CASE("zero thresholds never fail in or-mode") {
  const auto w = small_world();
  NetworkConfig c = w->network;
  c.destination_threshold = 0.0;
  const auto p = zero_thresholds(*w);
  Rng rng(1);
  ChannelState s = sample_stationary_state(*w->model, p, rng);
  for (int t = 0; t < 2000; ++t) {
    const Action a = random_policy(c.relays, c.max_power, rng);
    const auto out = env_step(*w->model, c, p, s, a, OutageMode::Or, rng);
    CHECK(out.reward == 1);
    s = out.next_state;
  }
}

TEST_CASE("all power at the source silences the second hop") {
  const auto w = small_world();
  const auto p = w->grid.at(0);
  Rng rng(2);
  ChannelState s = sample_stationary_state(*w->model, p, rng);
  for (int t = 0; t < 500; ++t) {
    const auto out = env_step(*w->model, w->network, p, s, Action{1 + t % 3, w->network.max_power}, OutageMode::Or, rng);
    CHECK(out.destination_rate == 0.0);
    CHECK(out.reward == 0);
    s = out.next_state;
  }
}

TEST_CASE("transitions do not depend on the action") {
  const auto w = small_world();
  const auto p = w->grid.at(7);
  Rng a(4), b(4);
  ChannelState s = sample_stationary_state(*w->model, p, a);
  sample_stationary_state(*w->model, p, b);
  for (int t = 0; t < 100; ++t) {
    const auto x = env_step(*w->model, w->network, p, s, Action{1, 0.01}, OutageMode::Or, a);
    const auto y = env_step(*w->model, w->network, p, s, Action{3, 0.09}, OutageMode::Or, b);
    CHECK(x.next_state == y.next_state);
    s = x.next_state;
  }
}

TEST_CASE("invalid actions are rejected") {
  const auto w = small_world();
  const auto p = w->grid.at(0);
  Rng rng(0);
  const ChannelState s = sample_stationary_state(*w->model, p, rng);
  CHECK_THROWS_AS(env_step(*w->model, w->network, p, s, Action{0, 0.05}, OutageMode::Or, rng), InvalidAction);
  CHECK_THROWS_AS(env_step(*w->model, w->network, p, s, Action{1, 0.2}, OutageMode::Or, rng), InvalidAction);
}

TEST_CASE("environment observes the previous slot") {
  const auto w = small_world();
  RelayEnvironmentFactory f(w);
  auto env = f.make(3);
  env->reset(11);
  CHECK(env->observation_size() == static_cast<std::size_t>(6 * 8));
  const auto obs = env->observe();
  double ones = 0.0;
  for (double v : obs) ones += v;
  CHECK(ones == 6.0);

  auto again = f.make(3);
  again->reset(11);
  std::vector<int> r1, r2;
  for (int t = 0; t < 50; ++t) {
    r1.push_back(env->step(Action{2, 0.05}));
    r2.push_back(again->step(Action{2, 0.05}));
  }
  CHECK(r1 == r2);
}

TEST_CASE("observation encodings") {
  CHECK(encode_observation({0, 2}, ObservationEncoding::OneHot, 3) == std::vector<double>{1, 0, 0, 0, 0, 1});
  CHECK(encode_observation({0, 2}, ObservationEncoding::Index, 3) == std::vector<double>{-1, 1});
  CHECK_THROWS(encode_observation({3}, ObservationEncoding::Index, 3));
}

TEST_CASE("parameter distance") {
  const auto w = small_world();
  const auto& g = w->grid;
  CHECK(tv_distance_params(g.at(9), g.at(9), g) == 0.0);
  const ParameterGrid corners({RelayCandidates{{10, 20, 30}, {30, 20, 10}, {1.0, 2.0}},
                               RelayCandidates{{15, 25, 35}, {35, 25, 15}, {1.0, 2.0}}});
  CHECK(tv_distance_params(corners.at(0), corners.at(corners.size() - 1), corners) == doctest::Approx(1.0));
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int i = 0; i < 200; ++i) {
    const auto a = g.at(pick(rng)), b = g.at(pick(rng));
    const double d = tv_distance_params(a, b, g);
    CHECK(d == tv_distance_params(b, a, g));
    CHECK((d >= 0.0 && d <= 1.0));
  }
}
