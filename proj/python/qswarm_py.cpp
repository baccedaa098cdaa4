#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qswarm/config.hpp"
#include "qswarm/errors.hpp"
#include "qswarm/harness.hpp"
#include "qswarm/qstore.hpp"
#include "qswarm/reward.hpp"

namespace py = pybind11;
using namespace qswarm;

namespace {

std::array<double, kNumActions> Row(const std::vector<double>& q) {
  if (q.size() != kNumActions) throw ValidationError("expected 4 action values");
  std::array<double, kNumActions> r{};
  std::copy(q.begin(), q.end(), r.begin());
  return r;
}

Image ToImage(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ValidationError("image must have shape (h, w, 3)");
  Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  auto v = a.unchecked<3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = {v(y, x, 0), v(y, x, 1), v(y, x, 2)};
  return img;
}

std::vector<double> FieldValues(const RewardField& f) {
  return {f.values().begin(), f.values().end()};
}

std::vector<std::vector<double>> TableRows(const QTable& q) {
  std::vector<std::vector<double>> rows;
  for (int s = 0; s < q.num_states(); ++s) {
    auto r = q.row(s);
    rows.emplace_back(r.begin(), r.end());
  }
  return rows;
}

py::dict StatDict(const Statistic& s) {
  py::dict d;
  d["count"] = s.count;
  d["mean"] = s.mean;
  d["std"] = s.std;
  return d;
}

py::dict PointDict(const SweepPoint& p) {
  py::dict d;
  d["param_name"] = p.param_name;
  d["param_value"] = p.param_value;
  d["n_agents"] = p.num_agents;
  d["steps"] = p.steps;
  d["runs"] = p.runs;
  d["fire_fraction"] = StatDict(p.fire_fraction);
  d["coverage_steps"] = StatDict(p.coverage_steps);
  return d;
}

struct PyStore {
  explicit PyStore(QStoreConfig c) : store(std::move(c)) {}
  QStore store;
};

}  // namespace

PYBIND11_MODULE(_qswarm, m) {
  m.doc() = "Shared-table multi-agent Q-learning on a fire grid.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<Action>(m, "Action")
      .value("LEFT", Action::kLeft)
      .value("RIGHT", Action::kRight)
      .value("UP", Action::kUp)
      .value("DOWN", Action::kDown);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<int, int>(), py::arg("width") = 4, py::arg("height") = 4)
      .def_readonly("width", &GridSpec::width)
      .def_readonly("height", &GridSpec::height)
      .def_property_readonly("num_states", &GridSpec::num_states);

  m.def("step", [](const GridSpec& g, std::pair<int, int> s, Action a) {
    auto n = Step(g, {s.first, s.second}, a);
    return std::make_pair(n.x, n.y);
  }, py::arg("grid"), py::arg("cell"), py::arg("action"));
  m.def("state_index", [](const GridSpec& g, std::pair<int, int> s) {
    return StateIndex(g, {s.first, s.second});
  });

  py::class_<DecaySchedule>(m, "DecaySchedule")
      .def(py::init([](double vmax, double vmin, double half) {
             DecaySchedule d{vmax, vmin, half};
             d.Validate();
             return d;
           }),
           py::arg("v_max"), py::arg("v_min"), py::arg("half_life"))
      .def_readonly("v_max", &DecaySchedule::v_max)
      .def_readonly("v_min", &DecaySchedule::v_min)
      .def_readonly("half_life", &DecaySchedule::half_life)
      .def("value", &DecaySchedule::value);

  py::class_<QTable>(m, "QTable")
      .def(py::init<int>(), py::arg("num_states") = 16)
      .def_property_readonly("num_states", &QTable::num_states)
      .def("get", [](const QTable& q, int s, Action a) { return q.at(s, a); })
      .def("set", [](QTable& q, int s, Action a, double v) { q.at(s, a) = v; })
      .def("max_value", &QTable::max_value)
      .def("rows", &TableRows)
      .def("__eq__", [](const QTable& a, const QTable& b) { return a == b; });

  m.def("q_update", [](QTable& q, int s, Action a, double r, int s2, double alpha, double gamma) {
    return QUpdate(q, {s, a, r, s2}, alpha, gamma);
  }, py::arg("q"), py::arg("state"), py::arg("action"), py::arg("reward"),
        py::arg("next_state"), py::arg("alpha"), py::arg("gamma"));
  m.def("boltzmann_probs", [](const std::vector<double>& row, double t) {
    return BoltzmannProbs(Row(row), t);
  }, py::arg("q_row"), py::arg("temperature"));
  m.def("greedy_action", [](const std::vector<double>& row) { return GreedyAction(Row(row)); });

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("num_agents", &ExperimentConfig::num_agents)
      .def_readwrite("total_steps", &ExperimentConfig::total_steps)
      .def_readwrite("replications", &ExperimentConfig::replications)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("relocate", &ExperimentConfig::relocate)
      .def("validate", &ExperimentConfig::Validate)
      .def("with_param", &ExperimentConfig::WithParam)
      .def("echo", &ExperimentConfig::Echo);

  m.def("load_config_string", [](const std::string& text) { return LoadConfigString(text); });

  m.def("run_replications", [](const ExperimentConfig& cfg, std::uint64_t point, int threads) {
    cfg.Validate();
    std::vector<RunMetrics> runs;
    {
      py::gil_scoped_release release;
      runs = RunReplications(cfg, point, threads);
    }
    py::list out;
    for (const auto& r : runs) {
      py::dict d;
      d["fire_steps"] = r.fire_steps;
      d["agent_steps"] = r.total_agent_steps;
      d["fire_fraction"] = FireTimeFraction(r);
      d["visits"] = r.visit_counts;
      d["coverage_step"] = r.coverage_step;
      out.append(d);
    }
    return out;
  }, py::arg("config"), py::arg("point") = 0, py::arg("threads") = 0);

  m.def("run", [](const ExperimentConfig& cfg, const std::filesystem::path& out, int threads) {
    RunReport r;
    {
      py::gil_scoped_release release;
      r = CmdRun(cfg, out, threads);
    }
    py::dict d = PointDict(r.summary);
    d["summary_line"] = r.summary_line;
    return d;
  }, py::arg("config"), py::arg("out"), py::arg("threads") = 0);

  m.def("sweep", [](const ExperimentConfig& cfg, const std::filesystem::path& out, int threads) {
    std::vector<SweepPoint> pts;
    {
      py::gil_scoped_release release;
      pts = CmdSweep(cfg, out, threads);
    }
    py::list l;
    for (const auto& p : pts) l.append(PointDict(p));
    return l;
  }, py::arg("config"), py::arg("out"), py::arg("threads") = 0);

  m.def("fire_pixel_fraction", [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a) {
    return FirePixelFraction(ToImage(a), FireClassifier{});
  });
  m.def("reward_field_from_image",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a, int cols,
           int rows, double zoom) {
          return FieldValues(RewardFieldFromImage(ToImage(a), cols, rows, zoom, FireClassifier{}));
        },
        py::arg("image"), py::arg("cols") = 4, py::arg("rows") = 4, py::arg("zoom") = 1.0);

  // The line protocol without a socket.
  py::class_<PyStore>(m, "QStore")
      .def(py::init([](const ExperimentConfig& cfg) { return new PyStore(MakeQStoreConfig(cfg)); }),
           py::arg("config") = ExperimentConfig{})
      .def("session", [](PyStore&) { return QStore::Session{}; })
      .def("handle", [](PyStore& p, QStore::Session& s, const std::string& line) {
        return p.store.Handle(s, line);
      })
      .def("table", [](const PyStore& p) { return p.store.table(); })
      .def_property_readonly("step", [](const PyStore& p) { return p.store.step(); })
      .def_property_readonly("log_size", [](const PyStore& p) { return p.store.log().size(); })
      .def("replay", [](const PyStore& p) {
        const auto& c = p.store.config();
        return ReplayWal(p.store.log(), c.num_states, c.params);
      });

  py::class_<QStore::Session>(m, "Session")
      .def_property_readonly("agent_id", [](const QStore::Session& s) { return s.agent_id; })
      .def_readonly("closed", &QStore::Session::closed);

}
