#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "relaynet/mdp.hpp"
#include "relaynet/policy.hpp"

namespace relaynet {

struct EvalProtocol {
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  int episodes = 100;
  int horizon = 50;
  std::uint64_t seed = 2024;

  /// Throws unless episodes >= 1, the test set is non-empty and contains
  /// every training id.
  void validate() const;
  /// Test ids that are not training ids.
  std::vector<std::size_t> unseen_ids() const;
};

struct Summary {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation, 0 for a single value
};

/// Two-pass mean and standard deviation.
Summary summarize(std::span<const double> values);

struct EvalEpisode {
  std::vector<double> rates;  // success rate per test parameter, protocol order
  double average = 0.0;
  double worst = 0.0;
};

struct EvalReport {
  std::string method;
  std::vector<EvalEpisode> episodes;
  Summary average;
  Summary worst;
};

/// Rolls the frozen policy on every test parameter for `horizon` slots per
/// evaluation episode. Episode e on parameter p always uses the same seeds,
/// so `workers` does not change the result.
EvalReport evaluate_model(const EnvironmentFactory& factory, const Policy& policy, const EvalProtocol& protocol,
                          const std::string& method, int workers = 1);

/// One row per report with MAX, MIN, MEAN, STDEV of the average and the
/// worst-case success rate. A unique best value per column is starred
/// (largest, except smallest STDEV).
void write_comparison_table(std::ostream& out, std::span<const EvalReport> reports);
void write_comparison_csv(std::ostream& out, std::span<const EvalReport> reports);
/// Per-episode rows: episode,average,worst.
void write_episode_csv(std::ostream& out, const EvalReport& report);

inline constexpr const char* kComparisonHeader =
    "method,avg_max,avg_min,avg_mean,avg_stdev,worst_max,worst_min,worst_mean,worst_stdev";

}  // namespace relaynet
