#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icebot/benchmark.hpp"
#include "icebot/catheter.hpp"
#include "icebot/controller.hpp"
#include "icebot/error.hpp"
#include "icebot/metrics.hpp"
#include "icebot/planner.hpp"
#include "icebot/roadmap.hpp"
#include "icebot/session.hpp"

namespace py = pybind11;
using namespace icebot;

namespace {

using Q = std::array<double, kAxes>;

Configuration cfg_of(const Q& q) { return Configuration::from_array(q); }

RunConfig run_config_of(const std::optional<std::string>& text) {
  return text ? RunConfig::from_json(*text) : RunConfig{};
}

py::dict pose_dict(const TipPose& p) {
  py::dict d;
  d["position"] = p.position;
  d["orientation"] = p.orientation;
  d["imaging_axis"] = p.imaging_axis;
  return d;
}

py::dict path_dict(const RecoveryPath& path) {
  py::dict d;
  d["vertex_ids"] = path.vertex_ids;
  std::vector<Q> wp;
  for (const auto& q : path.waypoints) wp.push_back(q.to_array());
  d["waypoints"] = wp;
  d["total_cost"] = path.total_cost;
  d["search_time"] = path.search_time.count();
  return d;
}

py::dict state_dict(const ControllerState& s) {
  py::dict d;
  d["mode"] = std::string(to_string(s.mode));
  d["teleop_active"] = s.teleop_active;
  d["current_q"] = s.current_q.to_array();
  d["actual_q"] = s.actual_q.to_array();
  d["active_view"] = s.active_view;
  d["progress_index"] = s.progress_index;
  d["tick"] = s.tick;
  d["time"] = s.time;
  return d;
}

py::dict outcome_dict(const RecoveryOutcome& o) {
  py::dict d;
  d["label"] = o.label;
  d["commanded"] = o.commanded.to_array();
  d["actual"] = o.actual.to_array();
  d["true_pose"] = pose_dict(o.true_pose);
  d["em_pose"] = pose_dict(o.em.pose);
  d["position_error"] = o.position_error;
  d["orientation_error"] = o.orientation_error;
  return d;
}

CatheterParams params_of(double bend_length, double knob_gain, double shaft_offset) {
  CatheterParams p{bend_length, knob_gain, shaft_offset};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "roadmap-based catheter view recovery";

  static py::handle error_type = py::exception<Error>(m, "IcebotError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.def("distance", [](const Q& a, const Q& b) { return distance(cfg_of(a), cfg_of(b)); }, py::arg("a"),
        py::arg("b"));

  py::class_<Roadmap>(m, "Roadmap")
      .def(py::init<double>(), py::arg("epsilon") = 1.0)
      .def("observe", [](Roadmap& r, const Q& q) { return r.observe(cfg_of(q)); }, py::arg("q"))
      .def("save_view", [](Roadmap& r, const std::string& label) { return r.save_view(label).vertex_id; },
           py::arg("label"))
      .def(
          "neighborhood",
          [](const Roadmap& r, const Q& q, std::optional<double> eps) {
            return eps ? r.neighborhood(cfg_of(q), *eps) : r.neighborhood(cfg_of(q));
          },
          py::arg("q"), py::arg("eps") = py::none())
      .def("vertex", [](const Roadmap& r, VertexId id) { return r.vertex(id).to_array(); })
      .def("find_view",
           [](const Roadmap& r, const std::string& label) -> std::optional<VertexId> {
             const auto* v = r.find_view(label);
             return v ? std::optional<VertexId>(v->vertex_id) : std::nullopt;
           })
      .def("stats",
           [](const Roadmap& r) {
             const auto s = r.stats();
             py::dict d;
             d["vertex_count"] = s.vertex_count;
             d["edge_count"] = s.edge_count;
             d["view_count"] = s.view_count;
             return d;
           })
      .def_property_readonly("epsilon", &Roadmap::epsilon)
      .def_property_readonly("edges", &Roadmap::edges)
      .def_property_readonly("views",
                             [](const Roadmap& r) {
                               std::vector<std::string> labels;
                               for (const auto& v : r.views()) labels.push_back(v.label);
                               return labels;
                             })
      .def_property_readonly("disconnected_insertions", &Roadmap::disconnected_insertions)
      .def("to_json", &Roadmap::to_json)
      .def_static("from_json", &Roadmap::from_json)
      .def("save", &Roadmap::save)
      .def_static("load", &Roadmap::load);

  m.def("plan", [](const Roadmap& r, VertexId start, const std::string& view) { return path_dict(plan(r, start, view)); },
        py::arg("roadmap"), py::arg("start"), py::arg("view"));
  m.def("snap_to_roadmap", [](const Roadmap& r, const Q& q) { return snap_to_roadmap(r, cfg_of(q)); });

  m.def(
      "forward_kinematics",
      [](const Q& q, double L, double k, double off) { return pose_dict(forward_kinematics(cfg_of(q), params_of(L, k, off))); },
      py::arg("q"), py::arg("bend_length") = 60.0, py::arg("knob_gain") = 1.0, py::arg("shaft_offset") = 0.0);
  m.def(
      "jacobian", [](const Q& q, double L, double k, double off) { return jacobian(cfg_of(q), params_of(L, k, off)); },
      py::arg("q"), py::arg("bend_length") = 60.0, py::arg("knob_gain") = 1.0, py::arg("shaft_offset") = 0.0);
  m.def(
      "tip_rates_to_joint_rates",
      [](const Vector6d& twist, const Q& q, double damping) {
        return tip_rates_to_joint_rates(twist, cfg_of(q), CatheterParams{}, damping);
      },
      py::arg("twist"), py::arg("q"), py::arg("damping") = kDefaultDamping);

  m.def("tip_position_error", &tip_position_error);
  m.def("orientation_error", &orientation_error);
  m.def(
      "rigid_register",
      [](const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst) {
        const Registration r = rigid_register(src, dst);
        return py::make_tuple(r.transform.rotation, r.transform.translation, r.fre);
      },
      py::arg("src"), py::arg("dst"), "Returns (R, t, fre) with dst ~ R src + t.");
  m.def(
      "build_report",
      [](const std::vector<std::tuple<std::string, double, std::optional<double>>>& samples) {
        std::vector<ErrorSample> s;
        for (const auto& [target, pos, ori] : samples) s.push_back({target, pos, ori});
        const RecoveryReport r = build_report(s);
        return py::make_tuple(r.to_text(), r.to_json());
      },
      py::arg("samples"), "samples: (target, position_error, orientation_error or None); returns (text, json)");

  py::class_<Controller>(m, "Controller")
      .def(py::init([](const std::optional<std::string>& config) { return std::make_unique<Controller>(run_config_of(config)); }),
           py::arg("config_json") = py::none())
      .def(
          "tick",
          [](Controller& c, std::optional<Q> rates) {
            std::optional<TeleopCommand> in;
            if (rates) in = KnobJog{*rates};
            return state_dict(c.tick(in));
          },
          py::arg("rates") = py::none())
      .def(
          "tick_tip",
          [](Controller& c, const std::array<double, 6>& twist) { return state_dict(c.tick(TipJog{twist})); },
          py::arg("twist"))
      .def("save_view", [](Controller& c, const std::string& label) { return c.save_view(label).vertex_id; })
      .def("request_recovery", &Controller::request_recovery)
      .def("cancel", &Controller::cancel)
      .def(
          "run_recovery",
          [](Controller& c, const std::string& label, int max_ticks) {
            c.request_recovery(label);
            for (int i = 0; i < max_ticks; ++i) {
              const auto& s = c.tick();
              if (s.mode == Mode::Completed) return outcome_dict(c.outcomes().back());
              if (s.mode == Mode::Idle) break;
            }
            throw Error(ErrorCode::Unreachable, "recovery of " + label + " did not complete");
          },
          py::arg("label"), py::arg("max_ticks") = 100000, "Requests a recovery and ticks until it completes.")
      .def_property_readonly("state", [](const Controller& c) { return state_dict(c.state()); })
      .def_property_readonly("roadmap", [](const Controller& c) { return c.roadmap(); })
      .def_property_readonly("outcomes",
                             [](const Controller& c) {
                               py::list out;
                               for (const auto& o : c.outcomes()) out.append(outcome_dict(o));
                               return out;
                             })
      .def("events", [](Controller& c) {
        py::list out;
        for (const auto& e : c.drain_events()) out.append(py::make_tuple(e.tick, e.name, e.detail));
        return out;
      });

  m.def(
      "benchmark",
      [](std::size_t n, std::uint64_t seed, std::size_t queries) {
        const BenchmarkResult r = benchmark(n, seed, queries);
        py::dict d;
        d["vertex_count"] = r.stats.vertex_count;
        d["edge_count"] = r.stats.edge_count;
        d["build_time"] = r.build_time;
        d["mean_query_time"] = r.mean_query_time;
        d["p99_query_time"] = r.p99_query_time;
        return d;
      },
      py::arg("n_states"), py::arg("seed") = 1, py::arg("queries") = 100);

  m.def(
      "replay",
      [](const std::string& log, const std::optional<std::string>& config) {
        const ReplayResult r = replay(log, run_config_of(config));
        py::dict d;
        d["roadmap"] = r.roadmap;
        d["trajectory_log"] = r.trajectory_log;
        d["report_json"] = r.report ? py::object(py::str(r.report->to_json())) : py::object(py::none());
        py::list outs;
        for (const auto& o : r.outcomes) outs.append(outcome_dict(o));
        d["outcomes"] = outs;
        return d;
      },
      py::arg("session_log"), py::arg("config_json") = py::none());
}
