#include <pybind11/complex.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include <pybind11/pybind11.h>

#include <vector>

#include "pdopf/agents.hpp"
#include "pdopf/coordinator.hpp"
#include "pdopf/errors.hpp"
#include "pdopf/network.hpp"
#include "pdopf/privacy.hpp"
#include "pdopf/validation.hpp"

namespace py = pybind11;
using namespace pdopf;

namespace {

template <typename T>
std::vector<T> to_vector(std::span<const T> s) {
  return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Privacy-preserving obfuscation of AC power-flow data";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", m.attr("Error"));
  py::register_exception<PrivacyError>(m, "PrivacyError", m.attr("Error"));
  py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error"));
  py::register_exception<InfeasibleCostBand>(m, "InfeasibleCostBand", m.attr("Error"));
  py::register_exception<LineSolveFailed>(m, "LineSolveFailed", m.attr("Error"));
  py::register_exception<ValidationError>(m, "ValidationError", m.attr("Error"));
  py::register_exception<ReferenceCostError>(m, "ReferenceCostError", m.attr("Error"));

  py::class_<Bus>(m, "Bus")
      .def_readonly("id", &Bus::id)
      .def_readonly("v_min", &Bus::v_min)
      .def_readonly("v_max", &Bus::v_max)
      .def_readonly("is_slack", &Bus::is_slack);

  py::class_<Generator>(m, "Generator")
      .def_readonly("bus", &Generator::bus)
      .def_readonly("s_min", &Generator::s_min)
      .def_readonly("s_max", &Generator::s_max)
      .def_readonly("cost_c2", &Generator::cost_c2)
      .def_readonly("cost_c1", &Generator::cost_c1)
      .def_readonly("cost_c0", &Generator::cost_c0)
      .def_readonly("reference_cost", &Generator::reference_cost)
      .def("cost", &Generator::cost, py::arg("p"));

  py::class_<Load>(m, "Load")
      .def_readonly("bus", &Load::bus)
      .def_readonly("demand", &Load::demand);

  py::class_<Line>(m, "Line")
      .def_readonly("from_bus", &Line::from)
      .def_readonly("to_bus", &Line::to)
      .def_readonly("admittance", &Line::admittance)
      .def_readonly("thermal_limit", &Line::thermal_limit)
      .def_readonly("angle_limit", &Line::angle_limit);

  py::class_<NetworkModel>(m, "NetworkModel")
      .def_property_readonly("base_mva", &NetworkModel::base_mva)
      .def_property_readonly("buses", [](const NetworkModel& n) { return to_vector(n.buses()); })
      .def_property_readonly("generators",
                             [](const NetworkModel& n) { return to_vector(n.generators()); })
      .def_property_readonly("loads", [](const NetworkModel& n) { return to_vector(n.loads()); })
      .def_property_readonly("lines", [](const NetworkModel& n) { return to_vector(n.lines()); })
      .def_property_readonly("slack_bus", &NetworkModel::slack_bus)
      .def("has_reference_costs", &NetworkModel::has_reference_costs)
      .def("__eq__", &NetworkModel::operator==);

  m.def("parse_case", [](const std::string& text) { return parse_case(text); }, py::arg("text"));
  m.def("read_case_file", &read_case_file, py::arg("path"));
  m.def("serialize_case", &serialize_case, py::arg("model"));
  m.def(
      "load_reference_costs",
      [](const NetworkModel& n, const std::vector<Complex>& d) { return load_reference_costs(n, d); },
      py::arg("model"), py::arg("dispatch"));
  m.def("read_reference_dispatch", &read_reference_dispatch, py::arg("path"),
        py::arg("generator_count"));

  py::enum_<Mechanism>(m, "Mechanism")
      .value("LAPLACE", Mechanism::PolarLaplace)
      .value("PIECEWISE", Mechanism::Piecewise);

  py::class_<PrivacyParams>(m, "PrivacyParams")
      .def(py::init([](double epsilon, double alpha, Mechanism mechanism) {
             return PrivacyParams{epsilon, alpha, mechanism};
           }),
           py::arg("epsilon") = 1.0, py::arg("alpha") = 0.1,
           py::arg("mechanism") = Mechanism::PolarLaplace)
      .def_readwrite("epsilon", &PrivacyParams::epsilon)
      .def_readwrite("alpha", &PrivacyParams::alpha)
      .def_readwrite("mechanism", &PrivacyParams::mechanism);

  py::class_<ObfuscatedLoads>(m, "ObfuscatedLoads")
      .def_readonly("values", &ObfuscatedLoads::values)
      .def_readonly("seed", &ObfuscatedLoads::seed)
      .def_property_readonly("noise_layout",
                             [](const ObfuscatedLoads& o) { return std::string(o.noise_layout()); });

  m.def(
      "obfuscate_all",
      [](const NetworkModel& n, const PrivacyParams& p, std::uint64_t seed) {
        const auto ranges = default_load_ranges(n);
        return obfuscate_all(n, p, ranges, seed);
      },
      py::arg("model"), py::arg("params"), py::arg("seed"));
  m.def("lambert_w_minus1", &lambert_w_minus1, py::arg("x"));
  m.def("polar_laplace_radius", &polar_laplace_radius, py::arg("p"), py::arg("params"));

  m.def(
      "line_flows",
      [](Complex y, double vm_from, double va_from, double vm_to, double va_to) {
        return line_flows(y, {vm_from, va_from, vm_to, va_to});
      },
      py::arg("admittance"), py::arg("vm_from"), py::arg("va_from"), py::arg("vm_to"),
      py::arg("va_to"));

  py::class_<AdmmConfig>(m, "AdmmConfig")
      .def(py::init<>())
      .def_readwrite("rho_init", &AdmmConfig::rho_init)
      .def_readwrite("rho_min", &AdmmConfig::rho_min)
      .def_readwrite("rho_max", &AdmmConfig::rho_max)
      .def_readwrite("t_max", &AdmmConfig::t_max)
      .def_readwrite("beta", &AdmmConfig::beta)
      .def_readwrite("primal_target", &AdmmConfig::primal_target)
      .def_readwrite("early_stop", &AdmmConfig::early_stop)
      .def_readwrite("threads", &AdmmConfig::threads);

  py::class_<TraceRecord>(m, "TraceRecord")
      .def_readonly("iter", &TraceRecord::iter)
      .def_readonly("eps_p", &TraceRecord::eps_p)
      .def_readonly("eps_d", &TraceRecord::eps_d)
      .def_readonly("rho", &TraceRecord::rho)
      .def_readonly("total_cost", &TraceRecord::total_cost)
      .def_readonly("boosting", &TraceRecord::boosting);

  py::class_<AdmmResult>(m, "AdmmResult")
      .def_readonly("hat_loads", &AdmmResult::hat_loads)
      .def_readonly("trace", &AdmmResult::trace)
      .def_readonly("converged", &AdmmResult::converged)
      .def_readonly("iterations_used", &AdmmResult::iterations_used)
      .def_property_readonly("dispatch", [](const AdmmResult& r) { return r.state.x.gen; })
      .def_property_readonly("bus_voltages", [](const AdmmResult& r) { return r.state.z.voltage; });

  m.def(
      "run_admm",
      [](const NetworkModel& n, const ObfuscatedLoads& o, const AdmmConfig& c) {
        py::gil_scoped_release release;
        return run_admm(n, o, c);
      },
      py::arg("model"), py::arg("noisy"), py::arg("config"));

  py::class_<FidelityReport>(m, "FidelityReport")
      .def_readonly("total_cost", &FidelityReport::total_cost)
      .def_readonly("reference_total", &FidelityReport::reference_total)
      .def_readonly("relative_gap", &FidelityReport::relative_gap)
      .def_readonly("per_generator_in_band", &FidelityReport::per_generator_in_band)
      .def_readonly("percent_diff", &FidelityReport::percent_diff);

  m.def(
      "dispatch_cost",
      [](const NetworkModel& n, const std::vector<Complex>& d) { return dispatch_cost(n, d); },
      py::arg("model"), py::arg("dispatch"));
  m.def(
      "fidelity_report",
      [](const NetworkModel& n, const std::vector<Complex>& d, double beta) {
        return fidelity_report(n, d, beta);
      },
      py::arg("model"), py::arg("dispatch"), py::arg("beta"));
  m.def(
      "privacy_loss",
      [](const std::vector<Complex>& a, const std::vector<Complex>& b) { return privacy_loss(a, b); },
      py::arg("hat_loads"), py::arg("tilde_loads"));
}
