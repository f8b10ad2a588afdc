// Python bindings. JSON-shaped values cross the boundary as dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "hadmc/action_codec.hpp"
#include "hadmc/baselines.hpp"
#include "hadmc/episode.hpp"
#include "hadmc/harness.hpp"
#include "hadmc/scenario.hpp"
#include "hadmc/training.hpp"

namespace py = pybind11;
using namespace hadmc;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict ledger_dict(const TimeLedger& l) {
  py::dict d;
  d["flight"] = l.flight;
  d["observing"] = l.observing;
  d["charging"] = l.charging;
  d["wait"] = l.wait;
  return d;
}

py::dict result_dict(const EpisodeResult& r) {
  py::dict d;
  d["completed"] = r.completed;
  d["total_reward"] = r.total_reward;
  d["objective"] = r.objective;
  d["makespan"] = r.makespan;
  d["stages"] = r.stages;
  d["ledger"] = ledger_dict(r.ledger);
  d["trace_csv"] = trace_to_csv(r.trace);
  return d;
}

py::list rows_list(const std::vector<EvalRow>& rows) {
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["step"] = r.step;
    d["mean_reward"] = r.mean_reward;
    d["completion_rate"] = r.completion_rate;
    d["mean_objective"] = r.mean_objective;
    d["t_obs"] = r.t_obs;
    d["t_chg"] = r.t_chg;
    d["t_wait"] = r.t_wait;
    d["t_fly"] = r.t_fly;
    out.append(d);
  }
  return out;
}

// Step-by-step environment driven by coupled discrete slots.
class Env {
 public:
  Env(const py::object& spec, int max_stages) : episode_(deployment_from_json(from_py(spec)), {{}, max_stages}) {}

  py::array_t<float> observation() const {
    const auto v = encode_state(episode_.state(), episode_.spec());
    return py::array_t<float>(static_cast<py::ssize_t>(v.size()), v.data());
  }
  std::vector<int> feasible() const { return feasible_discrete(episode_.state(), episode_.spec()); }

  py::tuple step(int a_dis, double a_con) {
    const auto f = feasible();
    if (std::find(f.begin(), f.end(), a_dis) == f.end()) throw ContractViolation("step: a_dis is not feasible here");
    const auto out = episode_.step(physical_times(a_dis, a_con, episode_.state(), episode_.spec()));
    py::dict info;
    info["case"] = to_string(out.kase);
    info["elapsed"] = out.elapsed;
    return py::make_tuple(observation(), out.reward, episode_.done(), info);
  }

  py::object objective() const {
    if (episode_.state().terminal != Terminal::completed) return py::none();
    return py::float_(hadmc::objective(episode_.state(), episode_.spec()));
  }

  Episode episode_;
};

py::list train(const py::object& config, const std::string& out) {
  const auto cfg = experiment_config_from_json(from_py(config), false);
  const std::filesystem::path dir(out);
  std::vector<EvalRow> rows;
  {
    py::gil_scoped_release release;
    if (cfg.model.kind == ModelKind::dqn_disc) {
      DqnTrainer t(cfg.scenario, cfg.model, cfg.train);
      t.run_all();
      t.write_checkpoints(dir);
      rows = t.report().rows;
    } else if (cfg.model.kind == ModelKind::greedy) {
      throw ContractViolation("train: greedy has nothing to train");
    } else {
      Trainer t(cfg.scenario, cfg.model, cfg.train);
      t.run_all();
      t.write_checkpoints(dir);
      rows = t.report().rows;
    }
    io::write_text_atomic(dir / "report.csv", eval_rows_to_csv(rows));
  }
  return rows_list(rows);
}

py::list evaluate(const std::vector<std::string>& models, const py::object& config) {
  const auto cfg = experiment_config_from_json(from_py(config), false);
  std::vector<NamedController> named;
  for (const auto& m : models) {
    if (m == "greedy") {
      named.push_back({"greedy", std::make_shared<GreedyController>()});
    } else {
      named.push_back({std::filesystem::path(m).filename().string(), load_controller(m)});
    }
  }
  std::vector<ComparisonRow> rows;
  {
    py::gil_scoped_release release;
    rows = run_comparison(named, make_deployments(cfg.scenario, DeploymentSet::test), cfg.scenario.tag(),
                          {cfg.train.reward, cfg.train.max_stages});
  }
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["model"] = r.model;
    d["scenario"] = r.scenario;
    d["deployment_id"] = r.deployment_id;
    d["objective"] = r.objective;
    d["completion_time"] = r.completion_time;
    d["completion_rate"] = r.completion_rate;
    d["t_obs"] = r.t_obs;
    d["t_chg"] = r.t_chg;
    d["t_wait"] = r.t_wait;
    d["t_fly"] = r.t_fly;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Drone and mobile-charger scheduling: environment, training and baselines";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def(
      "generate_deployment",
      [](const std::string& type, int n, int m_, std::int64_t seed) {
        return to_py(deployment_to_json(generate_deployment(deployment_type_from_string(type), static_cast<std::size_t>(n),
                                                            static_cast<std::size_t>(m_), {}, seed)));
      },
      py::arg("type"), py::arg("n"), py::arg("m"), py::arg("seed"));
  m.def(
      "state_dim", [](int n, int m_) { return state_dim(static_cast<std::size_t>(n), static_cast<std::size_t>(m_)); },
      py::arg("n"), py::arg("m"));
  m.def(
      "greedy",
      [](const py::object& spec) { return result_dict(greedy_schedule(deployment_from_json(from_py(spec)))); },
      py::arg("spec"), "Runs the greedy baseline on one deployment.");
  m.def("train", &train, py::arg("config"), py::arg("out"),
        "Trains the configured model, writes checkpoints to `out` and returns the evaluation rows.");
  m.def("evaluate", &evaluate, py::arg("models"), py::arg("config"),
        "Compares checkpoint directories (or \"greedy\") on the held-out deployments.");

  py::class_<Env>(m, "Env")
      .def(py::init<const py::object&, int>(), py::arg("spec"), py::arg("max_stages") = 0)
      .def("reset",
           [](Env& e) {
             e.episode_.reset();
             return e.observation();
           })
      .def("observation", &Env::observation)
      .def("feasible", &Env::feasible, "Feasible coupled discrete slots m*a + charger.")
      .def("step", &Env::step, py::arg("a_dis"), py::arg("a_con"),
           "Applies one stage; returns (observation, reward, done, info).")
      .def_property_readonly("done", [](const Env& e) { return e.episode_.done(); })
      .def_property_readonly("total_reward", [](const Env& e) { return e.episode_.total_reward(); })
      .def_property_readonly("ledger", [](const Env& e) { return ledger_dict(e.episode_.state().ledger); })
      .def("objective", &Env::objective)
      .def("trace_csv", [](const Env& e) { return trace_to_csv(e.episode_.trace()); });
}
