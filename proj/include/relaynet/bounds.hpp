#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "relaynet/common.hpp"

namespace relaynet {

/// Probability vector over a finite support.
class DiscreteDist {
 public:
  DiscreteDist() = default;
  /// Throws unless entries are >= 0 and sum to 1 within 1e-12.
  explicit DiscreteDist(std::vector<double> p);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

using Conditional = std::vector<DiscreteDist>;  // row x -> distribution over y

double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const DiscreteDist& p, const DiscreteDist& q);

/// Symmetric Dirichlet(1) sample.
DiscreteDist random_dist(std::size_t size, Rng& rng);

struct Lemma1Result {
  double lhs = 0.0;               // TV of the joints
  double conditional_term = 0.0;  // E_{x~p1} TV(p1(.|x), p2(.|x))
  double marginal_term = 0.0;     // TV(p1(x), p2(x))
  double rhs = 0.0;
  bool holds = false;
};

Lemma1Result lemma1_check(const DiscreteDist& p1_x, const DiscreteDist& p2_x, const Conditional& p1_y_given_x,
                          const Conditional& p2_y_given_x);

struct MarkovChain {
  DiscreteDist initial;
  Conditional transition;
};

struct Lemma2Result {
  std::vector<double> lhs;  // index t-1 for t = 1..horizon
  std::vector<double> rhs;
  double max_expected_row_tv = 0.0;
  bool holds = false;
};

/// Time-t marginals are propagated exactly; the right-hand side is
/// (t - 1) * max over t' in 2..horizon of E_{s ~ chain1 at t'-1} TV(rows).
Lemma2Result lemma2_check(const MarkovChain& chain1, const MarkovChain& chain2, int horizon);

/// Finite MDP family indexed by environment parameter. Transitions depend on
/// the parameter but not on the action; the reward table is shared.
struct TabularMdp {
  std::size_t states = 0;
  std::size_t actions = 0;
  DiscreteDist initial;
  std::vector<std::vector<double>> reward;  // [s][a]
  std::vector<Conditional> transitions;     // [p][s] -> next-state distribution
  double r_max = 1.0;

  std::size_t parameters() const { return transitions.size(); }
  void validate() const;
};

using PolicyTable = Conditional;  // [s] -> action distribution

/// State marginals d_1..d_H under parameter p.
std::vector<std::vector<double>> state_marginals(const TabularMdp& mdp, std::size_t parameter, int horizon);

/// sum_{t=1..H} gamma^t E[r(s_t, a_t)], s_1 ~ initial.
double exact_return(const TabularMdp& mdp, std::size_t parameter, const PolicyTable& policy, double gamma,
                    int horizon);

struct BoundReport {
  double lhs = 0.0;            // eta(pi~ | p_w)
  double expected_eta = 0.0;   // E_{p~P} eta(pi~ | p)
  double rhs = 0.0;
  double slack = 0.0;          // lhs - rhs
  double truncation = 0.0;     // r_max * gamma^(H+1) / (1 - gamma)
  std::size_t worst = 0;       // p_w
  std::vector<double> etas;
  double eps_policy = 0.0;
  double eps_policy_alt = 0.0;  // same expectation with states drawn under pi
  std::vector<double> eps_param;
  double policy_coefficient = 0.0;  // 4 r gamma / (1 - gamma)
  double param_coefficient = 0.0;   // 2 r gamma^2 / (1 - gamma)^2
  // |eta(pi~|p_w) - eta(pi|p_w)| <= 2 r sum_t gamma^t eps_policy
  double policy_gap = 0.0;
  double policy_gap_bound = 0.0;

  bool holds(double tolerance) const { return slack >= -(truncation + tolerance); }
};

BoundReport theorem1_verify(const TabularMdp& mdp, const DiscreteDist& parameter_dist, const PolicyTable& policy,
                            const PolicyTable& perturbed, double gamma, int horizon);

struct TheoremInstance {
  TabularMdp mdp;
  DiscreteDist parameter_dist;
  PolicyTable policy;
  PolicyTable perturbed;
  double gamma = 0.9;
};

/// Up to 4 states, 3 actions and 3 parameters with Dirichlet rows and
/// uniform rewards in [0, r_max].
TheoremInstance random_theorem_instance(Rng& rng, double gamma);

struct SweepReport {
  std::string suite;
  std::size_t instances = 0;
  std::size_t violations = 0;
  double min_slack = 0.0;  // min of rhs - lhs (lemmas) or lhs - rhs (theorem)
  double max_lhs = 0.0;
  double max_rhs = 0.0;
  double seconds = 0.0;
  std::vector<std::string> rows;  // CSV rows: instance,lhs,rhs,slack,holds
};

inline constexpr double kLemmaTolerance = 1e-12;
inline constexpr double kTheoremTolerance = 1e-6;

SweepReport lemma1_sweep(std::size_t instances, std::uint64_t seed, std::size_t max_support = 6);
SweepReport lemma2_sweep(std::size_t instances, std::uint64_t seed, std::size_t max_states = 5, int horizon = 10);
/// gamma alternates between 0.5 and 0.9.
SweepReport theorem1_sweep(std::size_t instances, std::uint64_t seed, int horizon = 60);

void write_sweep_text(std::ostream& out, const SweepReport& report);
void write_sweep_csv(std::ostream& out, const SweepReport& report);

}  // namespace relaynet
