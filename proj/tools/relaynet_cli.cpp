#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "relaynet/bounds.hpp"
#include "relaynet/experiment.hpp"

namespace fs = std::filesystem;
using namespace relaynet;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

// Bad configuration values are the caller's fault.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string scenario;
  std::vector<std::string> overrides;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool scenario_required) {
  auto* s = cmd->add_option("--scenario", opts.scenario, "Scenario JSON file");
  if (scenario_required) s->required();
  cmd->add_option("--set", opts.overrides, "Override a scenario key, e.g. --set ppo.episodes=50");
  cmd->add_option("--workers", opts.workers, "Rollout threads (1 is bit-reproducible)")
      ->check(CLI::PositiveNumber);
}

Scenario resolve_scenario(const CommonOptions& opts) {
  nlohmann::json doc = nlohmann::json::object();
  if (!opts.scenario.empty()) {
    std::ifstream in(opts.scenario);
    if (!in) throw std::runtime_error("cannot open scenario file " + opts.scenario);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("scenario file " + opts.scenario + ": " + e.what());
    }
  }
  try {
    for (const auto& o : opts.overrides) apply_override(doc, o);
    return scenario_from_json(doc);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_evaluation(const fs::path& dir, const EvalReport& report) {
  auto csv = open_output(dir / "evaluation.csv");
  write_comparison_csv(csv, std::span<const EvalReport>(&report, 1));
  auto episodes = open_output(dir / "evaluation_episodes.csv");
  write_episode_csv(episodes, report);
}

int cmd_train(const CommonOptions& opts, const std::string& method_name, std::uint64_t seed, bool seed_given,
              const std::string& out_dir) {
  const Scenario scenario = resolve_scenario(opts);
  const Method method = parse_method(method_name);
  if (!seed_given) seed = scenario.seeds.front();
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  const auto world = make_world(scenario);
  const RelayEnvironmentFactory factory(world);
  const auto protocol = make_protocol(scenario, world->grid);
  const auto outcome = train_method(scenario, factory, method, seed, opts.workers);

  {
    auto out = open_output(dir / "checkpoint.txt");
    save_checkpoint(out, outcome.model);
  }
  {
    auto out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, outcome.report);
  }
  {
    auto out = open_output(dir / "curves.csv");
    write_curves_csv(out, outcome.report);
  }
  {
    auto out = open_output(dir / "manifest.txt");
    write_manifest(out, scenario, world->grid, method, seed, protocol);
  }
  {
    auto out = open_output(dir / "scenario.json");
    out << to_json(scenario).dump(2) << '\n';
  }

  const auto policy = make_policy(outcome.model);
  const auto report = evaluate_model(factory, *policy, protocol, std::string(to_string(method)), opts.workers);
  write_evaluation(dir, report);
  std::ostringstream table;
  write_comparison_table(table, std::span<const EvalReport>(&report, 1));
  {
    auto out = open_output(dir / "summary.txt");
    out << table.str();
  }
  std::cout << table.str();
  return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& checkpoint, const std::string& format,
                 const std::string& out_dir) {
  const Scenario scenario = resolve_scenario(opts);
  std::ifstream in(checkpoint);
  if (!in) throw std::runtime_error("cannot open checkpoint " + checkpoint);
  const TrainedModel model = load_checkpoint(in);

  const auto world = make_world(scenario);
  check_grid(model, world->grid);
  const RelayEnvironmentFactory factory(world);
  const auto protocol = make_protocol(scenario, world->grid);
  const auto policy = make_policy(model);
  const auto report = evaluate_model(factory, *policy, protocol, std::string(to_string(model.method)), opts.workers);

  const std::span<const EvalReport> reports(&report, 1);
  if (format == "csv") {
    write_comparison_csv(std::cout, reports);
  } else {
    write_comparison_table(std::cout, reports);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_evaluation(out_dir, report);
  }
  return 0;
}

int cmd_verify(const std::string& suite, std::size_t instances, std::uint64_t seed, int horizon,
               const std::string& out_dir) {
  std::vector<SweepReport> reports;
  if (suite == "lemma1" || suite == "all") reports.push_back(lemma1_sweep(instances, seed));
  if (suite == "lemma2" || suite == "all") reports.push_back(lemma2_sweep(instances, seed, 5, horizon > 0 ? horizon : 10));
  if (suite == "theorem1" || suite == "all") reports.push_back(theorem1_sweep(instances, seed, horizon > 0 ? horizon : 60));
  std::size_t violations = 0;
  for (const auto& r : reports) {
    write_sweep_text(std::cout, r);
    violations += r.violations;
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      auto out = open_output(fs::path(out_dir) / (r.suite + ".csv"));
      write_sweep_csv(out, r);
    }
  }
  return violations == 0 ? 0 : kRuntimeError;
}

int cmd_print_config(const CommonOptions& opts) {
  const Scenario scenario = resolve_scenario(opts);
  std::cout << to_json(scenario).dump(2) << '\n';
  std::cout << "config_hash " << to_hex(config_hash(scenario)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relay selection and power allocation with robust actor-critic training"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::string method = "robust";
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* train = app.add_subcommand("train", "Train one method and evaluate the frozen model");
  add_common(train, train_opts, true);
  train->add_option("--method", method, "robust, ppo, ddpg, dqn or random")
      ->check(CLI::IsMember({"robust", "ppo", "ddpg", "dqn", "random"}));
  auto* seed_opt = train->add_option("--seed", seed, "Training seed (default: first scenario seed)");
  train->add_option("--out", out_dir, "Output directory")->required();

  CommonOptions eval_opts;
  std::string checkpoint;
  std::string format = "table";
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on the full parameter grid");
  add_common(evaluate, eval_opts, true);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint written by train")->required();
  evaluate->add_option("--format", format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  evaluate->add_option("--out", eval_out, "Optional directory for CSV outputs");

  std::string suite = "all";
  std::size_t instances = 0;
  std::uint64_t verify_seed = 1;
  int horizon = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "Randomized checks of the TV-distance bounds");
  verify->add_option("--suite", suite, "lemma1, lemma2, theorem1 or all")
      ->check(CLI::IsMember({"lemma1", "lemma2", "theorem1", "all"}));
  verify->add_option("--instances", instances, "Random instances per suite")->required()->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "Instance generator seed");
  verify->add_option("--horizon", horizon, "Horizon (default 10 for lemma2, 60 for theorem1)");
  verify->add_option("--out", verify_out, "Optional directory for per-instance CSV rows");

  CommonOptions print_opts;
  auto* print = app.add_subcommand("print-config", "Print the resolved scenario and its hash");
  add_common(print, print_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train) return cmd_train(train_opts, method, seed, seed_opt->count() > 0, out_dir);
    if (*evaluate) return cmd_evaluate(eval_opts, checkpoint, format, eval_out);
    if (*verify) return cmd_verify(suite, instances, verify_seed, horizon, verify_out);
    if (*print) return cmd_print_config(print_opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
