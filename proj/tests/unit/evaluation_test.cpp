#include <doctest.h>

#include <sstream>

#include "../support/bandit.hpp"
#include "relaynet/evaluation.hpp"
#include "relaynet/scenario.hpp"

using namespace relaynet;

namespace {

// Always picks the rewarded relay of the bandit.
class Oracle final : public Policy {
 public:
  Action act(const std::vector<double>& obs, Rng&) const override { return Action{obs[0] > 0.5 ? 1 : 2, 0.5}; }
};

EvalReport fake(const std::string& name, double avg_mean, double worst_stdev) {
  EvalReport r;
  r.method = name;
  r.average = Summary{1.0, 0.5, avg_mean, 0.1};
  r.worst = Summary{0.9, 0.4, 0.6, worst_stdev};
  return r;
}

}  // namespace

TEST_CASE("summary statistics") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  CHECK(s.max == 4);
  CHECK(s.min == 1);
  CHECK(s.mean == 2.5);
  CHECK(s.stdev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(summarize(std::vector<double>{7}).stdev == 0.0);
  // large offset: a one-pass formula would lose these digits
  const std::vector<double> shifted{1e9 + 1, 1e9 + 2, 1e9 + 3, 1e9 + 4};
  CHECK(summarize(shifted).stdev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-9));
  CHECK_THROWS(summarize(std::vector<double>{}));
}

TEST_CASE("perfect policy on the bandit") {
  testing::BanditFactory f;
  EvalProtocol p{{0}, {0}, 20, 30, 1};
  const auto r = evaluate_model(f, Oracle{}, p, "oracle");
  REQUIRE(r.episodes.size() == 20);
  CHECK(r.average.min == 1.0);
  CHECK(r.average.stdev == 0.0);
  CHECK(r.worst.mean == 1.0);
}

TEST_CASE("random policy on the desk grid") {
  Scenario s;
  s.markov.sample_budget = 20000;
  const auto w = make_world(s);
  const RelayEnvironmentFactory f(w);
  EvalProtocol p;
  p.train_ids = w->grid.subset({1, 2, 3}, {0});
  for (std::size_t id = 0; id < w->grid.size(); ++id) p.test_ids.push_back(id);
  p.episodes = 10;
  CHECK(p.unseen_ids().size() == 125 - 27);
  const RandomPolicy random(3, s.network.max_power);
  const auto r = evaluate_model(f, random, p, "random");
  CHECK((r.average.mean > 0.0 && r.average.mean < 1.0));
  CHECK(r.average.stdev > 0.0);
  for (const auto& e : r.episodes) {
    CHECK(e.worst <= e.average);
    CHECK(e.rates.size() == 125);
  }
  const auto again = evaluate_model(f, random, p, "random", 3);
  for (std::size_t e = 0; e < r.episodes.size(); ++e) CHECK(r.episodes[e].rates == again.episodes[e].rates);
}

TEST_CASE("protocol validation") {
  EvalProtocol p{{0, 9}, {0, 1}, 5, 10, 1};
  CHECK_THROWS(p.validate());
  p.train_ids = {0};
  CHECK_NOTHROW(p.validate());
  p.episodes = 0;
  CHECK_THROWS(p.validate());
}

TEST_CASE("comparison output") {
  const std::vector<EvalReport> same{fake("a", 0.8, 0.05), fake("b", 0.8, 0.05)};
  std::ostringstream table;
  write_comparison_table(table, same);
  CHECK(table.str().find('*') == std::string::npos);

  const std::vector<EvalReport> reports{fake("zeta", 0.7, 0.02), fake("alpha", 0.9, 0.05)};
  std::ostringstream csv;
  write_comparison_csv(csv, reports);
  std::istringstream lines(csv.str());
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  CHECK(header == kComparisonHeader);
  CHECK(std::count(header.begin(), header.end(), ',') == 8);
  CHECK(first.rfind("zeta,", 0) == 0);
  CHECK(second.rfind("alpha,", 0) == 0);

  std::ostringstream starred;
  write_comparison_table(starred, reports);
  CHECK(starred.str().find('*') != std::string::npos);
}
