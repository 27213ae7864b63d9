#include <doctest.h>

#include "relaynet/scenario.hpp"

using namespace relaynet;

TEST_CASE("defaults describe the desk scenario") {
  const Scenario s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.network.relays == 3);
  CHECK(s.markov.states == 8);
  CHECK(s.geometry.locations == 5);
  CHECK(s.train_locations.size() == 3);
  CHECK(s.ppo.horizon == 50);
  CHECK(s.seeds.size() == 5);
}

TEST_CASE("json round trip keeps the hash") {
  Scenario s;
  s.ppo.episodes = 17;
  s.thresholds = {1.0, 1.5};
  const auto back = scenario_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(config_hash(back) == config_hash(s));
  CHECK(config_hash(Scenario{}) != config_hash(s));
}

TEST_CASE("partial documents keep defaults") {
  const auto s = scenario_from_json(nlohmann::json::parse(R"({"ppo": {"episodes": 5}})"));
  CHECK(s.ppo.episodes == 5);
  CHECK(s.ppo.clip == 0.2);
  CHECK(s.network.relays == 3);
}

TEST_CASE("unknown keys and bad types name the path") {
  try {
    scenario_from_json(nlohmann::json::parse(R"({"ppo": {"epochz": 3}})"));
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("ppo.epochz") != std::string::npos);
  }
  try {
    scenario_from_json(nlohmann::json::parse(R"({"network": {"relays": "three"}})"));
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("network.relays") != std::string::npos);
  }
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse(R"({"ppo": {"gamma": 1.5}})")), std::invalid_argument);
}

TEST_CASE("overrides") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "ppo.episodes=12");
  apply_override(doc, "network.outage_mode=and");
  const auto s = scenario_from_json(doc);
  CHECK(s.ppo.episodes == 12);
  CHECK(s.outage_mode == OutageMode::And);
  CHECK_THROWS(apply_override(doc, "no_equals_sign"));
}

TEST_CASE("world and train distribution") {
  Scenario s;
  s.markov.sample_budget = 10000;
  const auto w = make_world(s);
  CHECK(w->grid.size() == 125);
  CHECK(w->model->link_count() == 6);
  const auto train = train_distribution(s, w->grid);
  CHECK(train.ids.size() == 27);
  CHECK_NOTHROW(train.validate());
}
