#include "relaynet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace relaynet {

namespace {

std::array<double, 8> columns(const EvalReport& r) {
  return {r.average.max, r.average.min, r.average.mean, r.average.stdev,
          r.worst.max,   r.worst.min,   r.worst.mean,   r.worst.stdev};
}

double episode_rate(const EnvironmentFactory& factory, const Policy& policy, std::size_t id, int horizon,
                    std::uint64_t seed) {
  auto env = factory.make(id);
  env->reset(seed);
  Rng rng = make_rng(seed, {1});
  int successes = 0;
  for (int t = 0; t < horizon; ++t) successes += env->step(policy.act(env->observe(), rng));
  return static_cast<double>(successes) / horizon;
}

}  // namespace

void EvalProtocol::validate() const {
  if (episodes < 1) throw std::invalid_argument("eval protocol: episodes must be >= 1");
  if (horizon < 1) throw std::invalid_argument("eval protocol: horizon must be >= 1");
  if (test_ids.empty()) throw std::invalid_argument("eval protocol: empty test set");
  for (auto id : train_ids) {
    if (std::find(test_ids.begin(), test_ids.end(), id) == test_ids.end()) {
      throw std::invalid_argument("eval protocol: train id " + std::to_string(id) + " missing from the test set");
    }
  }
}

std::vector<std::size_t> EvalProtocol::unseen_ids() const {
  std::vector<std::size_t> out;
  for (auto id : test_ids) {
    if (std::find(train_ids.begin(), train_ids.end(), id) == train_ids.end()) out.push_back(id);
  }
  return out;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty series");
  Summary s;
  s.max = *std::max_element(values.begin(), values.end());
  s.min = *std::min_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  // keep MIN <= MEAN <= MAX despite rounding
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

EvalReport evaluate_model(const EnvironmentFactory& factory, const Policy& policy, const EvalProtocol& protocol,
                          const std::string& method, int workers) {
  protocol.validate();
  EvalReport report;
  report.method = method;
  const std::size_t n = protocol.test_ids.size();
  const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  std::vector<double> averages, worsts;
  for (int e = 0; e < protocol.episodes; ++e) {
    EvalEpisode episode;
    episode.rates.resize(n);
    auto run = [&](std::size_t i) {
      const auto id = protocol.test_ids[i];
      episode.rates[i] = episode_rate(factory, policy, id, protocol.horizon,
                                      derive_seed(protocol.seed, {static_cast<std::uint64_t>(e), id}));
    };
    if (threads <= 1) {
      for (std::size_t i = 0; i < n; ++i) run(i);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < n; i += threads) run(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
      }
    }
    double sum = 0.0;
    for (double r : episode.rates) sum += r;
    episode.average = sum / static_cast<double>(n);
    episode.worst = *std::min_element(episode.rates.begin(), episode.rates.end());
    averages.push_back(episode.average);
    worsts.push_back(episode.worst);
    report.episodes.push_back(std::move(episode));
  }
  report.average = summarize(averages);
  report.worst = summarize(worsts);
  return report;
}

void write_comparison_table(std::ostream& out, std::span<const EvalReport> reports) {
  static const char* names[8] = {"AVG MAX", "AVG MIN", "AVG MEAN", "AVG STDEV",
                                 "WORST MAX", "WORST MIN", "WORST MEAN", "WORST STDEV"};
  std::vector<std::array<double, 8>> values;
  std::size_t width = 6;
  for (const auto& r : reports) {
    values.push_back(columns(r));
    width = std::max(width, r.method.size());
  }
  std::array<int, 8> best{};
  for (std::size_t c = 0; c < 8; ++c) {
    best[c] = -1;
    const bool lower = c % 4 == 3;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i][c];
      bool unique = true;
      bool is_best = true;
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (j == i) continue;
        const double o = values[j][c];
        if (o == v) unique = false;
        if (lower ? o < v : o > v) is_best = false;
      }
      if (is_best && unique) best[c] = static_cast<int>(i);
    }
  }
  out << std::left << std::setw(static_cast<int>(width)) << "method";
  for (const char* name : names) out << "  " << std::right << std::setw(12) << name;
  out << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << reports[i].method;
    for (std::size_t c = 0; c < 8; ++c) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(4) << values[i][c] << (best[c] == static_cast<int>(i) ? "*" : " ");
      out << "  " << std::right << std::setw(12) << cell.str();
    }
    out << '\n';
  }
}

void write_comparison_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << kComparisonHeader << '\n';
  for (const auto& r : reports) {
    out << r.method;
    for (double v : columns(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_episode_csv(std::ostream& out, const EvalReport& report) {
  out << "episode,average,worst\n";
  for (std::size_t e = 0; e < report.episodes.size(); ++e) {
    out << e << ',' << format_double(report.episodes[e].average) << ',' << format_double(report.episodes[e].worst)
        << '\n';
  }
}

}  // namespace relaynet
