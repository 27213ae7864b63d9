#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relaynet/bounds.hpp"
#include "relaynet/environment.hpp"
#include "relaynet/markov.hpp"

using namespace relaynet;

namespace {

std::vector<RelayCandidates> one_relay(std::vector<double> source, std::vector<double> destination) {
  return {RelayCandidates{std::move(source), std::move(destination), {1.0}}};
}

NetworkConfig single_relay_network() {
  NetworkConfig c;
  c.relays = 1;
  return c;
}

double max_row_deviation(const MarkovChannelModel& m, int link, int location) {
  double worst = 0.0;
  const auto occ = m.occupancy(link, location);
  for (int s = 0; s < m.states(); ++s) {
    const auto row = m.row(link, location, s);
    for (int j = 0; j < m.states(); ++j) worst = std::max(worst, std::abs(row[j] - occ[j]));
  }
  return worst;
}

}  // namespace

TEST_CASE("independent fading gives state-free rows") {
  MarkovBuildOptions opt;
  opt.states = 4;
  opt.correlation = 0.0;
  opt.sample_budget = 1000000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0}, {70.0}), opt);
  for (int link = 0; link < 2; ++link) {
    CHECK(max_row_deviation(m, link, 0) < 0.02);
    for (double p : m.occupancy(link, 0)) CHECK(p == doctest::Approx(0.25).epsilon(0.05));
  }
}

TEST_CASE("strong correlation makes rows diagonally dominant") {
  MarkovBuildOptions opt;
  opt.states = 5;
  opt.correlation = 0.99;
  opt.sample_budget = 200000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0}, {70.0}), opt);
  for (int link = 0; link < 2; ++link) {
    for (int s = 0; s < 5; ++s) {
      const auto row = m.row(link, 0, s);
      for (int j = 0; j < 5; ++j) {
        if (j != s) CHECK(row[s] > row[j]);
      }
    }
  }
}

TEST_CASE("two-state model structure") {
  MarkovBuildOptions opt;
  opt.states = 2;
  opt.sample_budget = 20000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0, 50.0}, {70.0, 50.0}), opt);
  CHECK(m.link(0).edges.size() == 3);
  CHECK(m.locations() == 2);
  for (int loc = 0; loc < 2; ++loc) {
    for (int s = 0; s < 2; ++s) {
      const auto row = m.row(0, loc, s);
      CHECK(row[0] + row[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("every gain falls in exactly one bin") {
  MarkovBuildOptions opt;
  opt.sample_budget = 20000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0}, {70.0}), opt);
  Rng rng(5);
  std::exponential_distribution<double> gain(1e3);
  for (int i = 0; i < 10000; ++i) {
    const int s = m.quantize(0, gain(rng));
    CHECK((s >= 0 && s < m.states()));
  }
  CHECK(m.quantize(0, 0.0) == 0);
  CHECK(m.quantize(0, 1e300) == m.states() - 1);
  CHECK_THROWS(m.quantize(0, -1.0));
}

TEST_CASE("markov model text round trip") {
  MarkovBuildOptions opt;
  opt.sample_budget = 10000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0, 40.0}, {70.0, 60.0}), opt);
  std::stringstream buf;
  m.save(buf);
  CHECK(MarkovChannelModel::load(buf) == m);

  std::stringstream bad("relaynet-markov-model 99\n");
  CHECK_THROWS_AS(MarkovChannelModel::load(bad), ParseError);
}

TEST_CASE("empirical transitions match the model") {
  MarkovBuildOptions opt;
  opt.states = 4;
  opt.sample_budget = 50000;
  const auto m = build_markov_model(single_relay_network(), one_relay({30.0}, {70.0}), opt);
  EnvironmentParameter p;
  p.location = {0};
  p.threshold = {0};
  p.source_distance = {30.0};
  p.destination_distance = {70.0};
  p.relay_threshold = {1.0};
  Rng rng(8);
  ChannelState s = sample_stationary_state(m, p, rng);
  std::vector<std::vector<double>> counts(4, std::vector<double>(4, 0.0));
  for (int t = 0; t < 100000; ++t) {
    const auto next = advance_state(m, p, s, rng);
    counts[s[0]][next[0]] += 1;
    s = next;
  }
  for (int i = 0; i < 4; ++i) {
    double total = 0.0;
    for (double c : counts[i]) total += c;
    REQUIRE(total > 0);
    for (double& c : counts[i]) c /= total;
    const auto row = m.row(0, 0, i);
    CHECK(tv_distance(counts[i], std::vector<double>(row.begin(), row.end())) < 0.02);
  }
}

TEST_CASE("candidate generation follows the source-destination axis") {
  Geometry g;
  const auto c = generate_candidates(g, 3, {1.0, 2.0});
  REQUIRE(c.size() == 3);
  for (const auto& relay : c) {
    CHECK(relay.source_distance.size() == 5);
    CHECK(relay.thresholds == std::vector<double>{1.0, 2.0});
    for (std::size_t l = 0; l + 1 < relay.source_distance.size(); ++l) {
      CHECK(relay.source_distance[l] > 0);
      CHECK(relay.destination_distance[l] > 0);
    }
  }
  CHECK(generate_candidates(g, 3, {1.0}) == generate_candidates(g, 3, {1.0}));
  CHECK_THROWS(generate_candidates(g, 0, {1.0}));
  CHECK_THROWS(generate_candidates(g, 1, {}));
}
