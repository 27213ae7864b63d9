// Acceptance checks, one PASS/FAIL line per criterion. Exit code is the
// number of failed criteria. The learning criteria (6, 7) train 5 seeds of
// two methods at desk scale and take several minutes.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "../support/bandit.hpp"
#include "relaynet/bounds.hpp"
#include "relaynet/experiment.hpp"

using namespace relaynet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Outcome lemmas() {
  const auto l1 = lemma1_sweep(10000, 1);
  const auto l2 = lemma2_sweep(1000, 1);
  const double seconds = l1.seconds + l2.seconds;
  return {l1.violations == 0 && l2.violations == 0,
          "lemma1 " + std::to_string(l1.violations) + "/10000 violations, lemma2 " + std::to_string(l2.violations) +
              "/1000 violations, " + fmt(seconds) + " s"};
}

Outcome theorem() {
  const auto r = theorem1_sweep(400, 1);
  return {r.violations == 0 && r.instances >= 200,
          std::to_string(r.violations) + "/" + std::to_string(r.instances) + " violations, min slack " +
              fmt(r.min_slack) + ", " + fmt(r.seconds) + " s"};
}

// Worst relative error of analytic against central-difference gradients.
double gradient_errors() {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(-1, 1), ls(-2.0, -0.2);
  double worst = 0.0;
  const double clip = 0.2;

  // forward/backward through the network
  for (int trial = 0; trial < 3; ++trial) {
    Mlp net({4, 8, 8, 3});
    net.initialize(rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 5), w = Eigen::MatrixXd::Random(3, 5);
    auto f = [&](const Mlp& n) { return (n.forward(x).array() * w.array()).sum(); };
    Tape tape;
    net.forward(x, tape);
    const Eigen::VectorXd g = net.backward(tape, w);
    const Eigen::VectorXd p = net.parameters();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Mlp a = net, b = net;
      Eigen::VectorXd pa = p, pb = p;
      pa[i] += 1e-5;
      pb[i] -= 1e-5;
      a.set_parameters(pa);
      b.set_parameters(pb);
      worst = std::max(worst, rel_error((f(a) - f(b)) / 2e-5, g[i]));
    }
  }

  // log-prob head
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector4d o(u(rng), u(rng), ls(rng), ls(rng));
    const std::array<double, 2> x{u(rng), u(rng)};
    const auto g = log_prob_gradient(GaussianHead::from_output(o), x);
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector4d a = o, b = o;
      a[i] += 1e-6;
      b[i] -= 1e-6;
      const double fd = (log_prob(GaussianHead::from_output(a), x) - log_prob(GaussianHead::from_output(b), x)) / 2e-6;
      worst = std::max(worst, rel_error(fd, g[i]));
    }
  }

  // clipped surrogate through the actor, away from the clip kinks
  for (int trial = 0; trial < 3; ++trial) {
    Mlp actor({3, 8, 4});
    actor.initialize(rng);
    const Mlp old = actor;
    Eigen::VectorXd p = actor.parameters();
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += 0.05 * u(rng);
    actor.set_parameters(p);
    const int b = 6;
    const Eigen::MatrixXd obs = Eigen::MatrixXd::Random(3, b);
    std::vector<std::array<double, 2>> x(b);
    Eigen::VectorXd old_lp(b), delta(b);
    const Eigen::MatrixXd old_out = old.forward(obs);
    for (int j = 0; j < b; ++j) {
      x[j] = {u(rng), u(rng)};
      old_lp[j] = log_prob(GaussianHead::from_output(old_out.col(j)), x[j]);
      delta[j] = 2 * u(rng);
    }
    auto objective = [&](const Mlp& net) {
      const Eigen::MatrixXd out = net.forward(obs);
      double total = 0.0;
      for (int j = 0; j < b; ++j) {
        total += actor_loss(std::exp(log_prob(GaussianHead::from_output(out.col(j)), x[j]) - old_lp[j]), delta[j], clip);
      }
      return total / b;
    };
    const Eigen::MatrixXd out = actor.forward(obs);
    bool kink = false;
    for (int j = 0; j < b; ++j) {
      const double r = std::exp(log_prob(GaussianHead::from_output(out.col(j)), x[j]) - old_lp[j]);
      kink = kink || std::abs(r - 1 + clip) < 1e-3 || std::abs(r - 1 - clip) < 1e-3;
    }
    if (kink) continue;
    const auto g = surrogate_gradient(actor, obs, x, old_lp, delta, clip).gradient;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Mlp a = actor, c = actor;
      Eigen::VectorXd pa = p, pc = p;
      pa[i] += 1e-6;
      pc[i] -= 1e-6;
      a.set_parameters(pa);
      c.set_parameters(pc);
      worst = std::max(worst, rel_error((objective(a) - objective(c)) / 2e-6, g[i]));
    }
  }

  // squared TD error through the critic
  Mlp critic({5, 8, 1});
  critic.initialize(rng);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(5, 7);
  const Eigen::VectorXd targets = Eigen::VectorXd::Random(7);
  auto loss = [&](const Mlp& net) {
    const Eigen::RowVectorXd q = net.forward(in);
    return (targets - q.transpose()).squaredNorm() / 7.0;
  };
  const auto g = critic_gradient(critic, in, targets).gradient;
  const Eigen::VectorXd p = critic.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Mlp a = critic, c = critic;
    Eigen::VectorXd pa = p, pc = p;
    pa[i] += 1e-6;
    pc[i] -= 1e-6;
    a.set_parameters(pa);
    c.set_parameters(pc);
    worst = std::max(worst, rel_error((loss(a) - loss(c)) / 2e-6, g[i]));
  }
  return worst;
}

Outcome numerics() {
  const double worst = gradient_errors();
  AdamState adam(0.01);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(5), g(5);
  g << 3, -0.02, 50, -7, 1e-3;
  adam_step(adam, p, g);
  double step_error = 0.0;
  for (int i = 0; i < 5; ++i) step_error = std::max(step_error, std::abs(std::abs(p[i]) - 0.01) / 0.01);
  return {worst < 1e-4 && step_error < 1e-3,
          "max gradient rel. error " + fmt(worst) + ", adam step-1 rel. error " + fmt(step_error)};
}

Outcome channel() {
  struct Setting {
    double power, threshold, sigma2, noise;
  };
  const std::vector<Setting> settings{
      {0.05, 1.0, 1.0, 0.001}, {0.01, 1.0, 0.5, 0.002}, {0.1, 2.0, 0.2, 0.01}, {0.02, 0.5, 2.0, 0.05}, {0.08, 3.0, 0.1, 0.001}};
  Rng rng(99);
  const int draws = 1000000;
  double worst_z = 0.0;
  for (const auto& s : settings) {
    int outages = 0;
    for (int i = 0; i < draws; ++i) {
      if (mutual_information(s.power, squared_norm(sample_channel(rng, s.sigma2, 1)), s.noise) < s.threshold) ++outages;
    }
    const double p = closed_form_outage(s.power, s.threshold, s.sigma2, s.noise);
    const double se = std::sqrt(p * (1 - p) / draws);
    worst_z = std::max(worst_z, std::abs(static_cast<double>(outages) / draws - p) / se);
  }
  return {worst_z < 3.0, "5 settings x 1e6 draws, max |z| = " + fmt(worst_z)};
}

std::vector<std::uint64_t> trace(const TrainReport& r) {
  std::vector<std::uint64_t> out;
  for (const auto& e : r.episodes) out.push_back(e.parameter_hash);
  return out;
}

Outcome equivalences(const Scenario& base) {
  Scenario s = base;
  s.geometry.locations = 1;
  s.train_locations = {0};
  s.ppo.episodes = 20;
  const auto world = make_world(s);
  const RelayEnvironmentFactory f(world);
  const auto train = train_distribution(s, world->grid);
  const auto robust = train_robust(f, train, s.ppo, 11);
  const auto ppo = train_ppo(f, train, s.ppo, 11);
  const bool identical = world->grid.size() == 1 && trace(robust.report) == trace(ppo.report) &&
                         robust.agent.actor == ppo.agent.actor && robust.agent.critic == ppo.agent.critic;

  Rng rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  bool all = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> etas(8), dist(8);
    for (auto& e : etas) e = 10 * u(rng);
    for (auto& d : dist) d = u(rng);
    all = all && robust_filter(etas, dist, 0.0, *std::min_element(etas.begin(), etas.end())).size() == 8;
  }
  return {identical && all, std::string("single-parameter traces ") + (identical ? "identical" : "differ") +
                                " over 20 episodes, zeta=0 " + (all ? "accepts all" : "rejects some")};
}

struct Learned {
  std::vector<double> average_mean, worst_min, worst_stdev;
};

Outcome baselines() {
  testing::BanditFactory f;
  const auto train = ParameterDistribution::uniform({0});
  double dqn = 0.0, ddpg = 0.0;
  std::size_t most_updates = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DqnConfig d;
    d.power_levels = 2;
    d.warmup = 200;
    d.batch = 32;
    d.target_sync = 50;
    d.epsilon_decay_steps = 500;
    const auto q = train_dqn(f, train, testing::bandit_loop(14), d, seed);
    dqn += testing::optimal_frequency(GreedyQPolicy(q.q, q.actions)) / 5;
    DdpgConfig c;
    c.warmup = 200;
    c.batch = 32;
    c.noise_std = 0.5;
    const auto a = train_ddpg(f, train, testing::bandit_loop(14), c, seed);
    ddpg += testing::optimal_frequency(DeterministicPolicy(a.actor, a.space)) / 5;
    most_updates = std::max({most_updates, q.report.gradient_updates, a.report.gradient_updates});
  }

  Rng rng(77);
  std::vector<int> counts(4, 0);
  double power = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto a = random_policy(4, 0.1, rng);
    ++counts[a.relay - 1];
    power += a.source_power;
  }
  double freq_error = 0.0;
  for (int c : counts) freq_error = std::max(freq_error, std::abs(static_cast<double>(c) / n - 0.25) / 0.25);
  const double power_error = std::abs(power / n - 0.05) / 0.05;
  const bool ok = dqn >= 0.9 && ddpg >= 0.9 && most_updates <= 500 && freq_error < 0.01 && power_error < 0.01;
  return {ok, "bandit optimal frequency dqn " + fmt(dqn) + ", ddpg " + fmt(ddpg) + " (" +
                  std::to_string(most_updates) + " updates), random relay rel. error " + fmt(freq_error) +
                  ", power mean rel. error " + fmt(power_error)};
}

Outcome reproducibility(const Scenario& base, const fs::path& dir) {
  Scenario s = base;
  s.ppo.episodes = 15;
  s.evaluation.episodes = 20;
  const auto world = make_world(s);
  const RelayEnvironmentFactory f(world);
  auto metrics = [&](Method m) {
    const auto out = train_method(s, f, m, 3);
    std::ostringstream csv;
    write_metrics_csv(csv, out.report);
    return std::make_pair(csv.str(), out.model);
  };
  bool same = true;
  std::string failed;
  for (auto m : {Method::Robust, Method::Ppo, Method::Dqn, Method::Ddpg}) {
    const auto a = metrics(m), b = metrics(m);
    if (a.first != b.first) {
      same = false;
      failed += " " + std::string(to_string(m));
    }
    // checkpoint through a file and back
    const auto path = dir / ("checkpoint_" + std::string(to_string(m)) + ".txt");
    {
      std::ofstream out(path);
      save_checkpoint(out, a.second);
    }
    std::ifstream in(path);
    const auto loaded = load_checkpoint(in);
    const auto protocol = make_protocol(s, world->grid);
    const auto before = evaluate_model(f, *make_policy(a.second), protocol, "x");
    const auto after = evaluate_model(f, *make_policy(loaded), protocol, "x");
    std::ostringstream x, y;
    write_comparison_csv(x, std::span<const EvalReport>(&before, 1));
    write_comparison_csv(y, std::span<const EvalReport>(&after, 1));
    if (x.str() != y.str()) {
      same = false;
      failed += " checkpoint-" + std::string(to_string(m));
    }
  }
  return {same, same ? "metrics CSV byte-identical on rerun, checkpoint round trip preserves evaluation (4 methods)"
                     : "mismatch:" + failed};
}

// Criteria 6 and 7 share the trained models.
std::pair<Outcome, Outcome> learning(const Scenario& s, int workers, const fs::path& dir) {
  const auto world = make_world(s);
  const RelayEnvironmentFactory f(world);
  const auto protocol = make_protocol(s, world->grid);
  std::vector<EvalReport> reports;
  const auto random = evaluate_model(f, RandomPolicy(world->network.relays, world->network.max_power), protocol,
                                     "random", workers);
  reports.push_back(random);
  std::map<Method, Learned> learned;
  std::ofstream curves(dir / "curves.csv");
  bool header = true;
  for (auto method : {Method::Robust, Method::Ppo}) {
    for (auto seed : s.seeds) {
      const auto start = std::chrono::steady_clock::now();
      const auto out = train_method(s, f, method, seed, workers);
      write_curves_csv(curves, out.report, header);
      header = false;
      auto r = evaluate_model(f, *make_policy(out.model), protocol,
                              std::string(to_string(method)) + "-" + std::to_string(seed), workers);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "  " << r.method << ": average " << fmt(r.average.mean) << ", worst min " << fmt(r.worst.min)
                << ", worst stdev " << fmt(r.worst.stdev) << " (" << fmt(secs) << " s)\n";
      learned[method].average_mean.push_back(r.average.mean);
      learned[method].worst_min.push_back(r.worst.min);
      learned[method].worst_stdev.push_back(r.worst.stdev);
      reports.push_back(std::move(r));
    }
  }
  std::ofstream table(dir / "comparison.csv");
  write_comparison_csv(table, reports);

  const double base = random.average.mean;
  const double robust_avg = median(learned[Method::Robust].average_mean);
  const double ppo_avg = median(learned[Method::Ppo].average_mean);
  Outcome six{robust_avg >= base + 0.05 && ppo_avg >= base + 0.05,
              "median average success robust " + fmt(robust_avg) + ", ppo " + fmt(ppo_avg) + ", random " + fmt(base)};

  const double robust_min = median(learned[Method::Robust].worst_min);
  const double ppo_min = median(learned[Method::Ppo].worst_min);
  const double robust_sd = median(learned[Method::Robust].worst_stdev);
  const double ppo_sd = median(learned[Method::Ppo].worst_stdev);
  Outcome seven{robust_min >= ppo_min && robust_sd <= ppo_sd,
                "median worst-case MIN robust " + fmt(robust_min) + " vs ppo " + fmt(ppo_min) + ", STDEV robust " +
                    fmt(robust_sd) + " vs ppo " + fmt(ppo_sd)};
  return {six, seven};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string scenario_path;
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  int workers = 1;
  app.add_option("--scenario", scenario_path, "Scenario for criteria 5-7 and 9 (default: built-in desk scenario)");
  app.add_option("--out", out_dir, "Directory for curves, comparison table and checkpoints");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--workers", workers, "Rollout threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const Scenario scenario = scenario_path.empty() ? Scenario{} : load_scenario(scenario_path);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  int failures = 0;
  auto report = [&](int criterion, const std::string& name, const std::function<Outcome()>& run) {
    if (!wanted(criterion)) return;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << criterion << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail
              << std::endl;
  };

  report(1, "lemma verification", lemmas);
  report(2, "theorem bound", theorem);
  report(3, "numerical engine", numerics);
  report(4, "channel correctness", channel);
  report(5, "algorithm equivalences", [&] { return equivalences(scenario); });
  if (wanted(6) || wanted(7)) {
    std::pair<Outcome, Outcome> results;
    try {
      results = learning(scenario, workers, dir);
    } catch (const std::exception& e) {
      results.first = results.second = {false, std::string("threw: ") + e.what()};
    }
    report(6, "desk-scale learning", [&] { return results.first; });
    report(7, "robustness effect", [&] { return results.second; });
  }
  report(8, "baseline sanity", baselines);
  report(9, "reproducibility", [&] { return reproducibility(scenario, dir); });
  return failures;
}
