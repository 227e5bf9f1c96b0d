#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dashf/assignment.hpp"
#include "dashf/driver.hpp"
#include "dashf/experiment.hpp"
#include "dashf/model.hpp"
#include "dashf/oracle.hpp"
#include "dashf/resources.hpp"
#include "dashf/scenario.hpp"

namespace py = pybind11;
using namespace dashf;

namespace {

driver::RunOptions options_from_kwargs(double epsilon, int max_outer) {
  driver::RunOptions opt;
  opt.epsilon = epsilon;
  opt.max_outer = max_outer;
  return opt;
}

py::dict trace_to_dict(const driver::RunTrace& trace) {
  py::list iters, ys, scrs, obj1, obj2, delays, energies, services, walls;
  for (const auto& r : trace.rows) {
    iters.append(r.iteration);
    ys.append(r.y);
    scrs.append(r.scr_value);
    obj1.append(r.obj_part1);
    obj2.append(r.obj_part2);
    delays.append(r.delay_total);
    energies.append(r.energy_total);
    services.append(r.service_total);
    walls.append(r.wall_ms);
  }
  py::dict d;
  d["iter"] = iters;
  d["y"] = ys;
  d["scr"] = scrs;
  d["obj_part1"] = obj1;
  d["obj_part2"] = obj2;
  d["T_total"] = delays;
  d["E_total"] = energies;
  d["V"] = services;
  d["wall_ms"] = walls;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "service-cost ratio optimizer for collaborative adapter training at the edge";
  m.attr("__version__") = experiment::kToolVersion;

  py::register_exception<SchemaError>(m, "SchemaError");

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("n_users", &ScenarioConfig::n_users)
      .def_readwrite("n_servers", &ScenarioConfig::n_servers)
      .def_readwrite("area_side_m", &ScenarioConfig::area_side_m)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("bandwidth_max_hz", &ScenarioConfig::bandwidth_max_hz)
      .def_readwrite("user_power_max_w", &ScenarioConfig::user_power_max_w)
      .def_readwrite("server_power_max_w", &ScenarioConfig::server_power_max_w)
      .def_readwrite("user_speed_max", &ScenarioConfig::user_speed_max)
      .def_readwrite("server_speed_max", &ScenarioConfig::server_speed_max)
      .def_readwrite("weight_delay", &ScenarioConfig::weight_delay)
      .def_readwrite("weight_energy", &ScenarioConfig::weight_energy)
      .def_readwrite("noise_psd_dbm", &ScenarioConfig::noise_psd_dbm)
      .def("to_json", &config_to_json)
      .def_static("from_json", &config_from_json);

  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("n_users", &Scenario::n_users)
      .def_property_readonly("n_servers", &Scenario::n_servers)
      .def_property_readonly("gain", [](const Scenario& s) { return s.gain; })
      .def_property_readonly("noise_psd", [](const Scenario& s) { return s.noise_psd; })
      .def("to_json", &scenario_to_json)
      .def_static("from_json", &scenario_from_json)
      .def("hash_hex", &scenario_hash_hex);

  py::class_<Allocation>(m, "Allocation")
      .def_readwrite("assoc", &Allocation::assoc)
      .def_readwrite("split", &Allocation::split)
      .def_readwrite("bandwidth", &Allocation::bandwidth)
      .def_readwrite("user_power", &Allocation::user_power)
      .def_readwrite("server_power", &Allocation::server_power)
      .def_readwrite("user_speed", &Allocation::user_speed)
      .def_readwrite("server_speed", &Allocation::server_speed)
      .def_readwrite("delay_bound", &Allocation::delay_bound)
      .def("to_json", &allocation_to_json)
      .def_static("from_json", &allocation_from_json);

  py::class_<CostBreakdown>(m, "CostBreakdown")
      .def_readonly("delay_total", &CostBreakdown::delay_total)
      .def_readonly("energy_total", &CostBreakdown::energy_total)
      .def_readonly("service_total", &CostBreakdown::service_total);

  py::class_<driver::Solution>(m, "Solution")
      .def_readonly("allocation", &driver::Solution::allocation)
      .def_readonly("scr", &driver::Solution::scr_value)
      .def_readonly("converged", &driver::Solution::converged)
      .def_readonly("iterations", &driver::Solution::iterations);

  m.def("generate", &generate, py::arg("config"));
  m.def("save_scenario", &save_scenario, py::arg("scenario"), py::arg("path"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("evaluate", &evaluate, py::arg("scenario"), py::arg("allocation"));
  m.def("scr", py::overload_cast<const Scenario&, const Allocation&>(&scr), py::arg("scenario"),
        py::arg("allocation"));
  m.def(
      "check_feasibility",
      [](const Scenario& scn, const Allocation& a, double tol) {
        std::vector<std::string> out;
        for (const auto& v : check_feasibility(scn, a, tol)) out.push_back(v.describe());
        return out;
      },
      py::arg("scenario"), py::arg("allocation"), py::arg("tol") = 1e-9);
  m.def("link_rate", &link_rate, py::arg("bandwidth"), py::arg("power"), py::arg("gain"),
        py::arg("noise_psd"));
  m.def("adapter_param_count", &adapter_param_count, py::arg("d_in"), py::arg("d_adapt"),
        py::arg("d_out"));
  m.def("path_loss_db", &path_loss_db, py::arg("distance_km"));
  m.def("initialize", &driver::initialize, py::arg("scenario"));
  m.def(
      "min_cost_assignment",
      [](const Eigen::MatrixXd& cost) { return min_cost_assignment(cost); }, py::arg("cost"));

  m.def(
      "run",
      [](const Scenario& scn, const std::string& algorithm, double epsilon, int max_outer) {
        const auto [sol, trace] =
            driver::run_algorithm(algorithm, scn, options_from_kwargs(epsilon, max_outer));
        return py::make_tuple(sol, trace_to_dict(trace));
      },
      py::arg("scenario"), py::arg("algorithm") = "dashf", py::arg("epsilon") = 1e-3,
      py::arg("max_outer") = 30);

  m.def(
      "brute_force_association",
      [](const Scenario& scn, const Allocation& res, double y, long max_enumeration) {
        const auto r = oracle::brute_force_association(scn, res, y, max_enumeration);
        py::dict d;
        d["found"] = r.found;
        d["objective"] = r.objective;
        d["assoc"] = r.assoc;
        d["split"] = r.split;
        d["delay_bound"] = r.delay_bound;
        return d;
      },
      py::arg("scenario"), py::arg("resources"), py::arg("y"),
      py::arg("max_enumeration") = 100000);
}
