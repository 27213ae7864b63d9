#include "relaynet/bounds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace relaynet {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_rows(const Conditional& rows, std::size_t count, std::size_t width, const char* what) {
  if (rows.size() != count) throw std::invalid_argument(std::string(what) + ": wrong number of rows");
  for (const auto& row : rows) {
    if (row.size() != width) throw std::invalid_argument(std::string(what) + ": row support size mismatch");
  }
}

double expected_row_tv(std::span<const double> weights, const Conditional& a, const Conditional& b) {
  double total = 0.0;
  for (std::size_t s = 0; s < weights.size(); ++s) total += weights[s] * tv_distance(a[s], b[s]);
  return total;
}

std::vector<double> propagate(std::span<const double> d, const Conditional& rows) {
  std::vector<double> next(rows.front().size(), 0.0);
  for (std::size_t s = 0; s < d.size(); ++s) {
    for (std::size_t j = 0; j < next.size(); ++j) next[j] += d[s] * rows[s][j];
  }
  return next;
}

std::string csv_row(std::size_t i, double lhs, double rhs, double slack, bool holds) {
  return std::to_string(i) + ',' + format_double(lhs) + ',' + format_double(rhs) + ',' + format_double(slack) + ',' +
         (holds ? "1" : "0");
}

Conditional random_rows(std::size_t rows, std::size_t width, Rng& rng) {
  Conditional out;
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) out.push_back(random_dist(width, rng));
  return out;
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <class Body>
SweepReport run_sweep(const char* suite, std::size_t instances, Body body) {
  if (instances == 0) throw std::invalid_argument(std::string(suite) + ": instance count must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  SweepReport report;
  report.suite = suite;
  report.instances = instances;
  report.min_slack = INFINITY;
  report.rows.reserve(instances);
  for (std::size_t i = 0; i < instances; ++i) body(i, report);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void record(SweepReport& report, std::size_t i, double lhs, double rhs, double slack, bool holds) {
  report.min_slack = std::min(report.min_slack, slack);
  report.max_lhs = std::max(report.max_lhs, lhs);
  report.max_rhs = std::max(report.max_rhs, rhs);
  if (!holds) ++report.violations;
  report.rows.push_back(csv_row(i, lhs, rhs, slack, holds));
}

}  // namespace

DiscreteDist::DiscreteDist(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw std::invalid_argument("distribution: empty support");
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("distribution: negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("distribution: entries sum to " + format_double(sum) + ", expected 1");
  }
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: support size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

double tv_distance(const DiscreteDist& p, const DiscreteDist& q) { return tv_distance(p.values(), q.values()); }

DiscreteDist random_dist(std::size_t size, Rng& rng) {
  if (size == 0) throw std::invalid_argument("random_dist: empty support");
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> p(size);
  double sum = 0.0;
  for (auto& v : p) sum += (v = gamma(rng));
  for (auto& v : p) v /= sum;
  return DiscreteDist(std::move(p));
}

Lemma1Result lemma1_check(const DiscreteDist& p1_x, const DiscreteDist& p2_x, const Conditional& p1_y_given_x,
                          const Conditional& p2_y_given_x) {
  if (p1_x.size() != p2_x.size()) throw std::invalid_argument("lemma1_check: marginal support mismatch");
  if (p1_y_given_x.empty()) throw std::invalid_argument("lemma1_check: empty conditional table");
  const std::size_t ny = p1_y_given_x.front().size();
  check_rows(p1_y_given_x, p1_x.size(), ny, "lemma1_check p1(y|x)");
  check_rows(p2_y_given_x, p1_x.size(), ny, "lemma1_check p2(y|x)");

  Lemma1Result r;
  double joint = 0.0;
  for (std::size_t x = 0; x < p1_x.size(); ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      joint += std::abs(p1_x[x] * p1_y_given_x[x][y] - p2_x[x] * p2_y_given_x[x][y]);
    }
  }
  r.lhs = 0.5 * joint;
  r.conditional_term = expected_row_tv(p1_x.values(), p1_y_given_x, p2_y_given_x);
  r.marginal_term = tv_distance(p1_x, p2_x);
  r.rhs = r.conditional_term + r.marginal_term;
  r.holds = r.lhs <= r.rhs + kLemmaTolerance;
  return r;
}

Lemma2Result lemma2_check(const MarkovChain& chain1, const MarkovChain& chain2, int horizon) {
  if (horizon < 1) throw std::invalid_argument("lemma2_check: horizon must be >= 1");
  const std::size_t n = chain1.initial.size();
  if (chain2.initial.size() != n) throw std::invalid_argument("lemma2_check: state space mismatch");
  check_rows(chain1.transition, n, n, "lemma2_check chain1");
  check_rows(chain2.transition, n, n, "lemma2_check chain2");
  if (chain1.initial.values() != chain2.initial.values()) {
    throw std::invalid_argument("lemma2_check: precondition violated, initial distributions must be equal");
  }

  Lemma2Result r;
  std::vector<double> d1 = chain1.initial.values();
  std::vector<double> d2 = d1;
  r.lhs.push_back(0.0);
  for (int t = 2; t <= horizon; ++t) {
    r.max_expected_row_tv = std::max(r.max_expected_row_tv, expected_row_tv(d1, chain1.transition, chain2.transition));
    d1 = propagate(d1, chain1.transition);
    d2 = propagate(d2, chain2.transition);
    r.lhs.push_back(tv_distance(d1, d2));
  }
  r.holds = true;
  for (int t = 1; t <= horizon; ++t) {
    r.rhs.push_back((t - 1) * r.max_expected_row_tv);
    if (r.lhs[t - 1] > r.rhs[t - 1] + kLemmaTolerance) r.holds = false;
  }
  return r;
}

void TabularMdp::validate() const {
  if (states == 0 || actions == 0) throw std::invalid_argument("tabular mdp: empty state or action set");
  if (initial.size() != states) throw std::invalid_argument("tabular mdp: initial distribution size mismatch");
  if (transitions.empty()) throw std::invalid_argument("tabular mdp: no parameters");
  for (const auto& rows : transitions) check_rows(rows, states, states, "tabular mdp transitions");
  if (reward.size() != states) throw std::invalid_argument("tabular mdp: reward table size mismatch");
  if (!(r_max >= 0.0) || !std::isfinite(r_max)) throw std::invalid_argument("tabular mdp: r_max must be finite");
  for (const auto& row : reward) {
    if (row.size() != actions) throw std::invalid_argument("tabular mdp: reward row size mismatch");
    for (double v : row) {
      if (!std::isfinite(v) || std::abs(v) > r_max) throw std::invalid_argument("tabular mdp: |reward| exceeds r_max");
    }
  }
}

std::vector<std::vector<double>> state_marginals(const TabularMdp& mdp, std::size_t parameter, int horizon) {
  if (parameter >= mdp.parameters()) throw std::invalid_argument("state_marginals: parameter out of range");
  std::vector<std::vector<double>> d{mdp.initial.values()};
  for (int t = 2; t <= horizon; ++t) d.push_back(propagate(d.back(), mdp.transitions[parameter]));
  return d;
}

double exact_return(const TabularMdp& mdp, std::size_t parameter, const PolicyTable& policy, double gamma,
                    int horizon) {
  check_rows(policy, mdp.states, mdp.actions, "exact_return policy");
  const auto d = state_marginals(mdp, parameter, horizon);
  double eta = 0.0;
  double discount = gamma;
  for (const auto& dt : d) {
    double expected = 0.0;
    for (std::size_t s = 0; s < mdp.states; ++s) {
      for (std::size_t a = 0; a < mdp.actions; ++a) expected += dt[s] * policy[s][a] * mdp.reward[s][a];
    }
    eta += discount * expected;
    discount *= gamma;
  }
  return eta;
}

BoundReport theorem1_verify(const TabularMdp& mdp, const DiscreteDist& parameter_dist, const PolicyTable& policy,
                            const PolicyTable& perturbed, double gamma, int horizon) {
  mdp.validate();
  if (parameter_dist.size() != mdp.parameters()) {
    throw std::invalid_argument("theorem1_verify: parameter distribution size mismatch");
  }
  check_rows(policy, mdp.states, mdp.actions, "theorem1_verify policy");
  check_rows(perturbed, mdp.states, mdp.actions, "theorem1_verify perturbed policy");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("theorem1_verify: gamma must be in [0, 1)");
  if (horizon < 1) throw std::invalid_argument("theorem1_verify: horizon must be >= 1");

  BoundReport r;
  for (std::size_t p = 0; p < mdp.parameters(); ++p) {
    r.etas.push_back(exact_return(mdp, p, perturbed, gamma, horizon));
    r.expected_eta += parameter_dist[p] * r.etas.back();
  }
  r.worst = static_cast<std::size_t>(std::min_element(r.etas.begin(), r.etas.end()) - r.etas.begin());
  r.lhs = r.etas[r.worst];

  // Marginals are action independent, so sampling states under pi~ or pi
  // gives the same expectation.
  const auto d_w = state_marginals(mdp, r.worst, horizon);
  for (const auto& dt : d_w) r.eps_policy = std::max(r.eps_policy, expected_row_tv(dt, perturbed, policy));
  r.eps_policy_alt = r.eps_policy;

  double expected_eps_param = 0.0;
  for (std::size_t p = 0; p < mdp.parameters(); ++p) {
    double eps = 0.0;
    for (int t = 2; t <= horizon; ++t) {
      eps = std::max(eps, expected_row_tv(d_w[static_cast<std::size_t>(t - 2)], mdp.transitions[r.worst],
                                          mdp.transitions[p]));
    }
    r.eps_param.push_back(eps);
    expected_eps_param += parameter_dist[p] * eps;
  }

  const double one_minus = 1.0 - gamma;
  r.policy_coefficient = 4.0 * mdp.r_max * gamma / one_minus;
  r.param_coefficient = 2.0 * mdp.r_max * gamma * gamma / (one_minus * one_minus);
  r.rhs = r.expected_eta - r.policy_coefficient * r.eps_policy - r.param_coefficient * expected_eps_param;
  r.slack = r.lhs - r.rhs;
  r.truncation = mdp.r_max * std::pow(gamma, horizon + 1) / one_minus;

  double discount_sum = 0.0;
  double discount = gamma;
  for (int t = 1; t <= horizon; ++t, discount *= gamma) discount_sum += discount;
  r.policy_gap = std::abs(r.lhs - exact_return(mdp, r.worst, policy, gamma, horizon));
  r.policy_gap_bound = 2.0 * mdp.r_max * discount_sum * r.eps_policy;
  return r;
}

TheoremInstance random_theorem_instance(Rng& rng, double gamma) {
  TheoremInstance inst;
  inst.gamma = gamma;
  auto& m = inst.mdp;
  m.states = uniform_size(rng, 1, 4);
  m.actions = uniform_size(rng, 1, 3);
  const std::size_t params = uniform_size(rng, 1, 3);
  m.r_max = 1.0;
  m.initial = random_dist(m.states, rng);
  std::uniform_real_distribution<double> reward(0.0, m.r_max);
  m.reward.assign(m.states, std::vector<double>(m.actions));
  for (auto& row : m.reward) {
    for (auto& v : row) v = reward(rng);
  }
  for (std::size_t p = 0; p < params; ++p) m.transitions.push_back(random_rows(m.states, m.states, rng));
  inst.parameter_dist = random_dist(params, rng);
  inst.policy = random_rows(m.states, m.actions, rng);
  inst.perturbed = random_rows(m.states, m.actions, rng);
  return inst;
}

SweepReport lemma1_sweep(std::size_t instances, std::uint64_t seed, std::size_t max_support) {
  if (max_support < 1) throw std::invalid_argument("lemma1_sweep: max_support must be >= 1");
  return run_sweep("lemma1", instances, [&](std::size_t i, SweepReport& report) {
    Rng rng = make_rng(seed, {i});
    const std::size_t nx = uniform_size(rng, 1, max_support);
    const std::size_t ny = uniform_size(rng, 1, max_support);
    const auto p1 = random_dist(nx, rng);
    const auto p2 = random_dist(nx, rng);
    const auto c1 = random_rows(nx, ny, rng);
    const auto c2 = random_rows(nx, ny, rng);
    const auto r = lemma1_check(p1, p2, c1, c2);
    record(report, i, r.lhs, r.rhs, r.rhs - r.lhs, r.holds);
  });
}

SweepReport lemma2_sweep(std::size_t instances, std::uint64_t seed, std::size_t max_states, int horizon) {
  if (max_states < 1) throw std::invalid_argument("lemma2_sweep: max_states must be >= 1");
  return run_sweep("lemma2", instances, [&](std::size_t i, SweepReport& report) {
    Rng rng = make_rng(seed, {i});
    const std::size_t n = uniform_size(rng, 1, max_states);
    const auto initial = random_dist(n, rng);
    const MarkovChain a{initial, random_rows(n, n, rng)};
    const MarkovChain b{initial, random_rows(n, n, rng)};
    const auto r = lemma2_check(a, b, horizon);
    double slack = INFINITY;
    for (std::size_t t = 0; t < r.lhs.size(); ++t) slack = std::min(slack, r.rhs[t] - r.lhs[t]);
    record(report, i, *std::max_element(r.lhs.begin(), r.lhs.end()), r.rhs.back(), slack, r.holds);
  });
}

SweepReport theorem1_sweep(std::size_t instances, std::uint64_t seed, int horizon) {
  return run_sweep("theorem1", instances, [&](std::size_t i, SweepReport& report) {
    Rng rng = make_rng(seed, {i});
    const auto inst = random_theorem_instance(rng, i % 2 == 0 ? 0.5 : 0.9);
    const auto r = theorem1_verify(inst.mdp, inst.parameter_dist, inst.policy, inst.perturbed, inst.gamma, horizon);
    const bool gap_ok = r.policy_gap <= r.policy_gap_bound + kTheoremTolerance;
    record(report, i, r.lhs, r.rhs, r.slack, r.holds(kTheoremTolerance) && gap_ok);
  });
}

void write_sweep_text(std::ostream& out, const SweepReport& report) {
  out << "suite " << report.suite << '\n'
      << "instances " << report.instances << '\n'
      << "violations " << report.violations << '\n'
      << "min_slack " << format_double(report.min_slack) << '\n'
      << "max_lhs " << format_double(report.max_lhs) << '\n'
      << "max_rhs " << format_double(report.max_rhs) << '\n';
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "instance,lhs,rhs,slack,holds\n";
  for (const auto& row : report.rows) out << row << '\n';
}

}  // namespace relaynet
