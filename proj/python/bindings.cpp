#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "relaynet/bounds.hpp"
#include "relaynet/experiment.hpp"

namespace py = pybind11;
using namespace relaynet;

namespace {

Scenario scenario_from(const std::string& json_text, const std::vector<std::string>& overrides) {
  nlohmann::json doc = json_text.empty() ? nlohmann::json::object() : nlohmann::json::parse(json_text);
  for (const auto& o : overrides) apply_override(doc, o);
  return scenario_from_json(doc);
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  d["max"] = s.max;
  d["min"] = s.min;
  d["mean"] = s.mean;
  d["stdev"] = s.stdev;
  return d;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["average"] = summary_dict(r.average);
  d["worst"] = summary_dict(r.worst);
  return d;
}

py::dict sweep_dict(const SweepReport& r) {
  py::dict d;
  d["suite"] = r.suite;
  d["instances"] = r.instances;
  d["violations"] = r.violations;
  d["min_slack"] = r.min_slack;
  return d;
}

// Trains one method, optionally writes the checkpoint, and evaluates the
// frozen policy on the full grid.
py::dict train(const std::string& method, std::uint64_t seed, const std::string& scenario_json,
               const std::vector<std::string>& overrides, const std::string& checkpoint) {
  const Scenario s = scenario_from(scenario_json, overrides);
  const auto world = make_world(s);
  const RelayEnvironmentFactory factory(world);
  TrainOutcome out;
  EvalReport report;
  {
    py::gil_scoped_release release;
    out = train_method(s, factory, parse_method(method), seed);
    report = evaluate_model(factory, *make_policy(out.model), make_protocol(s, world->grid), method);
  }
  if (!checkpoint.empty()) {
    std::ofstream file(checkpoint);
    if (!file) throw std::runtime_error("cannot write " + checkpoint);
    save_checkpoint(file, out.model);
  }
  std::ostringstream metrics;
  write_metrics_csv(metrics, out.report);
  py::dict d = report_dict(report);
  d["metrics_csv"] = metrics.str();
  d["config_hash"] = to_hex(config_hash(s));
  return d;
}

py::dict evaluate(const std::string& checkpoint, const std::string& scenario_json,
                  const std::vector<std::string>& overrides) {
  const Scenario s = scenario_from(scenario_json, overrides);
  std::ifstream file(checkpoint);
  if (!file) throw std::runtime_error("cannot open checkpoint " + checkpoint);
  const auto model = load_checkpoint(file);
  const auto world = make_world(s);
  check_grid(model, world->grid);
  const RelayEnvironmentFactory factory(world);
  py::gil_scoped_release release;
  const auto report = evaluate_model(factory, *make_policy(model), make_protocol(s, world->grid),
                                     std::string(to_string(model.method)));
  py::gil_scoped_acquire acquire;
  return report_dict(report);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relay selection and power allocation with robust actor-critic training";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidAction>(m, "InvalidAction", PyExc_ValueError);

  m.def("mutual_information", &mutual_information, py::arg("power"), py::arg("gain"), py::arg("noise"));
  m.def("closed_form_outage", &closed_form_outage, py::arg("power"), py::arg("threshold"), py::arg("sigma2"),
        py::arg("noise"));
  m.def("decode_action", [](double relay, double power, int relays, double max_power) {
    const auto a = decode_action(relay, power, relays, max_power);
    return py::make_tuple(a.relay, a.source_power);
  }, py::arg("relay_value"), py::arg("power_value"), py::arg("relays"), py::arg("max_power"));
  m.def("tv_distance", [](const std::vector<double>& p, const std::vector<double>& q) { return tv_distance(p, q); });
  m.def("advantage", &advantage, py::arg("reward"), py::arg("gamma"), py::arg("next_q_max"), py::arg("q"));
  m.def("actor_loss", &actor_loss, py::arg("ratio"), py::arg("delta"), py::arg("clip"));
  m.def("robust_filter", [](const std::vector<double>& etas, const std::vector<double>& distances, double zeta,
                            double eta_worst) { return robust_filter(etas, distances, zeta, eta_worst); },
        py::arg("etas"), py::arg("distances"), py::arg("zeta"), py::arg("eta_worst"));

  m.def("lemma1_sweep", [](std::size_t n, std::uint64_t seed) { return sweep_dict(lemma1_sweep(n, seed)); },
        py::arg("instances"), py::arg("seed") = 1);
  m.def("lemma2_sweep", [](std::size_t n, std::uint64_t seed) { return sweep_dict(lemma2_sweep(n, seed)); },
        py::arg("instances"), py::arg("seed") = 1);
  m.def("theorem1_sweep", [](std::size_t n, std::uint64_t seed) { return sweep_dict(theorem1_sweep(n, seed)); },
        py::arg("instances"), py::arg("seed") = 1);

  m.def("resolve_scenario", [](const std::string& json_text, const std::vector<std::string>& overrides) {
    return to_json(scenario_from(json_text, overrides)).dump();
  }, py::arg("scenario_json") = "", py::arg("overrides") = std::vector<std::string>{});
  m.def("config_hash", [](const std::string& json_text, const std::vector<std::string>& overrides) {
    return to_hex(config_hash(scenario_from(json_text, overrides)));
  }, py::arg("scenario_json") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def("train", &train, py::arg("method"), py::arg("seed"), py::arg("scenario_json") = "",
        py::arg("overrides") = std::vector<std::string>{}, py::arg("checkpoint") = "");
  m.def("evaluate", &evaluate, py::arg("checkpoint"), py::arg("scenario_json") = "",
        py::arg("overrides") = std::vector<std::string>{});
}
