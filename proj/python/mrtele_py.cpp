#include "mrtele/bridge/protocol.hpp"
#include "mrtele/clutch.hpp"
#include "mrtele/errors.hpp"
#include "mrtele/kinematics.hpp"
#include "mrtele/operator_model.hpp"
#include "mrtele/session.hpp"
#include "mrtele/telemetry.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mrtele;

namespace {

py::dict record_to_dict(const session::TelemetryRecord& r) {
  py::dict d;
  d["t"] = r.t;
  d["master_q"] = r.master_q;
  d["slave_q"] = r.slave_q;
  d["master_ee"] = r.master_ee;
  d["slave_ee"] = r.slave_ee;
  d["force"] = r.force;
  d["current"] = r.current;
  d["tau"] = r.tau;
  d["semg"] = r.semg;
  d["events"] = session::events_to_string(r.events);
  return d;
}

kinematics::KinematicChain chain_by_name(const std::string& name) {
  if (name == "exoskeleton") return kinematics::exoskeleton_chain();
  if (name == "slave7") return kinematics::default_slave_chain();
  throw InvalidArgument("unknown chain '" + name + "' (exoskeleton or slave7)");
}

}  // namespace

PYBIND11_MODULE(_mrtele, m) {
  m.doc() = "Teleoperation simulator core: clutch law, kinematics, scenarios";

  py::register_exception<SaturationError>(m, "SaturationError", PyExc_ValueError);
  py::register_exception<FitFailure>(m, "FitFailure", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<clutch::HillParams>(m, "HillParams")
      .def(py::init<>())
      .def(py::init([](double v_max, double k, double n) { return clutch::HillParams{v_max, k, n}; }),
           py::arg("v_max"), py::arg("k"), py::arg("n"))
      .def_readwrite("v_max", &clutch::HillParams::v_max)
      .def_readwrite("k", &clutch::HillParams::k)
      .def_readwrite("n", &clutch::HillParams::n)
      .def("__repr__", [](const clutch::HillParams& p) {
        return "HillParams(v_max=" + session::format_double(p.v_max) + ", k=" + session::format_double(p.k) +
               ", n=" + session::format_double(p.n) + ")";
      });

  py::class_<clutch::FitResult>(m, "FitResult")
      .def_readonly("params", &clutch::FitResult::params)
      .def_readonly("mae", &clutch::FitResult::mae)
      .def_readonly("rmse", &clutch::FitResult::rmse)
      .def_readonly("nrmse", &clutch::FitResult::nrmse);

  m.def("hill_torque", &clutch::hill_torque, py::arg("params"), py::arg("current"));
  m.def("inverse_hill", &clutch::inverse_hill, py::arg("params"), py::arg("torque"));
  m.def(
      "fit_hill",
      [](const std::vector<double>& currents, const std::vector<double>& torques) {
        if (currents.size() != torques.size()) throw InvalidArgument("currents and torques differ in length");
        std::vector<clutch::Sample> samples;
        for (std::size_t i = 0; i < currents.size(); ++i) samples.push_back({currents[i], torques[i]});
        return clutch::fit_hill(samples);
      },
      py::arg("currents"), py::arg("torques"));
  m.def("normalized_rmse", &clutch::normalized_rmse, py::arg("rmse"), py::arg("torque_min"),
        py::arg("torque_max"));
  m.def(
      "performance_metrics",
      [](double torque, double mass, double volume, double power) {
        clutch::ClutchSpec spec;
        spec.max_torque = torque;
        spec.mass = mass;
        spec.volume = volume;
        spec.dissipated_power = power;
        const auto pm = clutch::performance_metrics(spec);
        return py::dict(py::arg("tmr") = pm.tmr, py::arg("tvr") = pm.tvr, py::arg("tpr") = pm.tpr);
      },
      py::arg("torque") = 42.12, py::arg("mass") = 0.45, py::arg("volume") = 10.4e-5, py::arg("power") = 10.14);

  m.def(
      "forward_kinematics",
      [](const std::string& chain, const Eigen::VectorXd& q) {
        const auto pose = kinematics::forward_kinematics(chain_by_name(chain), q);
        return py::make_tuple(Eigen::Vector3d(pose.position), Eigen::Matrix3d(pose.orientation));
      },
      py::arg("chain"), py::arg("q"), "Position and rotation of the last frame for a preset chain.");
  m.def(
      "numeric_jacobian",
      [](const std::string& chain, const Eigen::VectorXd& q) {
        return Eigen::MatrixXd(kinematics::numeric_jacobian(chain_by_name(chain), q));
      },
      py::arg("chain"), py::arg("q"));

  m.def(
      "semg_proxy",
      [](double torque, double intercept, double slope) {
        operator_model::SEMGCalibration cal;
        cal.intercept = intercept;
        cal.slope = slope;
        return operator_model::semg_proxy(torque, cal);
      },
      py::arg("torque"), py::arg("intercept") = operator_model::SEMGCalibration{}.intercept,
      py::arg("slope") = operator_model::SEMGCalibration{}.slope);

  m.def(
      "run_scenario_file",
      [](const std::string& path) {
        const auto sc = session::load_scenario_file(path);
        py::list out;
        for (const auto& r : session::run_scenario(sc)) out.append(record_to_dict(r));
        return out;
      },
      py::arg("path"), "Runs a scenario file and returns one dict per tick.");
  m.def(
      "collisions",
      [](const std::string& path) {
        const auto sc = session::load_scenario_file(path);
        py::list out;
        for (const auto& c : session::analyze_collisions(sc, session::run_scenario(sc))) {
          out.append(py::dict(py::arg("object") = c.object_index, py::arg("window_start") = c.window_start,
                              py::arg("window_end") = c.window_end, py::arg("rms_torque") = c.rms_torque,
                              py::arg("peak_torque") = c.peak_torque, py::arg("rms_semg") = c.rms_semg));
        }
        return out;
      },
      py::arg("path"), "Runs a scenario file and summarises each collision.");
  m.def(
      "telemetry_text",
      [](const std::string& path, const std::string& format) {
        const auto sc = session::load_scenario_file(path);
        return session::telemetry_to_string(session::run_scenario(sc),
                                            session::telemetry_format_from_string(format));
      },
      py::arg("path"), py::arg("format") = "csv");

  m.def(
      "parse_command",
      [](const std::string& text) {
        const auto c = bridge::parse_command(text);
        return py::dict(py::arg("id") = c.id, py::arg("kind") = bridge::to_string(c.kind),
                        py::arg("values") = c.values, py::arg("scenario") = c.scenario);
      },
      py::arg("text"));
  py::register_exception<bridge::ProtocolError>(m, "ProtocolError", PyExc_ValueError);
  m.attr("SCHEMA_VERSION") = bridge::kSchemaVersion;
}
