#include <doctest.h>

#include <sstream>

#include "relaynet/experiment.hpp"

using namespace relaynet;

namespace {

Scenario tiny() {
  Scenario s;
  s.markov.sample_budget = 10000;
  s.ppo.episodes = 2;
  s.ppo.parameters_per_episode = 2;
  s.ppo.trials = 1;
  s.ppo.horizon = 20;
  s.dqn.warmup = 10;
  s.ddpg.warmup = 10;
  s.evaluation.episodes = 3;
  s.evaluation.horizon = 10;
  return s;
}

std::string save(const TrainedModel& m) {
  std::ostringstream out;
  save_checkpoint(out, m);
  return out.str();
}

}  // namespace

TEST_CASE("method names") {
  for (auto m : {Method::Robust, Method::Ppo, Method::Ddpg, Method::Dqn, Method::Random}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("a2c"), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves evaluation") {
  const Scenario s = tiny();
  const auto world = make_world(s);
  const RelayEnvironmentFactory f(world);
  const auto protocol = make_protocol(s, world->grid);
  for (auto method : {Method::Robust, Method::Ppo, Method::Ddpg, Method::Dqn, Method::Random}) {
    CAPTURE(to_string(method));
    const auto outcome = train_method(s, f, method, 4);
    std::istringstream in(save(outcome.model));
    const auto loaded = load_checkpoint(in);
    CHECK(loaded == outcome.model);
    CHECK_NOTHROW(check_grid(loaded, world->grid));
    const auto a = evaluate_model(f, *make_policy(outcome.model), protocol, "x");
    const auto b = evaluate_model(f, *make_policy(loaded), protocol, "x");
    std::ostringstream ca, cb;
    write_comparison_csv(ca, std::span<const EvalReport>(&a, 1));
    write_comparison_csv(cb, std::span<const EvalReport>(&b, 1));
    CHECK(ca.str() == cb.str());
  }
}

TEST_CASE("checkpoint errors") {
  const Scenario s = tiny();
  const auto world = make_world(s);
  const RelayEnvironmentFactory f(world);
  const auto text = save(train_method(s, f, Method::Ppo, 1).model);

  auto load = [](const std::string& t) {
    std::istringstream in(t);
    return load_checkpoint(in);
  };
  auto replaced = [&](const std::string& from, const std::string& to) {
    std::string t = text;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  try {
    load(replaced("relaynet-checkpoint 1", "relaynet-checkpoint 2"));
    FAIL("expected a version error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  CHECK_THROWS_AS(load("hello\n"), ParseError);
  CHECK_THROWS_AS(load(replaced("method ppo", "method a2c")), ParseError);
  CHECK_THROWS_AS(load(text.substr(0, text.size() / 2)), ParseError);
  CHECK_THROWS_AS(load(replaced("config_hash ", "config_hash zz")), ParseError);

  Scenario other = s;
  other.geometry.seed = 99;
  const auto other_world = make_world(other);
  CHECK_THROWS_AS(check_grid(load(text), other_world->grid), std::runtime_error);
}

TEST_CASE("manifest lists the split") {
  const Scenario s = tiny();
  const auto world = make_world(s);
  const auto protocol = make_protocol(s, world->grid);
  CHECK(protocol.test_ids.size() == 125);
  CHECK(protocol.unseen_ids().size() == 98);
  std::ostringstream out;
  write_manifest(out, s, world->grid, Method::Robust, 1, protocol);
  CHECK(out.str().find("config_hash " + to_hex(config_hash(s))) != std::string::npos);
  CHECK(out.str().find("train_ids 27") != std::string::npos);
  CHECK(out.str().find("unseen_ids 98") != std::string::npos);
}
