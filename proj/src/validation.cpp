#include "pdopf/validation.hpp"

#include <algorithm>
#include <cmath>

#include "pdopf/errors.hpp"

namespace pdopf {

namespace {

constexpr double kBoundSlack = 1e-9;

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(ValidationError::Kind::DimensionMismatch, what);
}

Complex ohm_flow(Complex y, Complex v_e, Complex v_f) {
  return std::conj(y) * (std::norm(v_e) - v_e * std::conj(v_f));
}

void check_upper(std::vector<BoundViolation>& out, std::string id, double value, double limit) {
  if (value > limit + kBoundSlack) out.push_back({std::move(id), value - limit});
}

void check_lower(std::vector<BoundViolation>& out, std::string id, double value, double limit) {
  if (value < limit - kBoundSlack) out.push_back({std::move(id), limit - value});
}

}  // namespace

FeasibilityReport power_flow_residuals(const NetworkModel& model,
                                       std::span<const Complex> bus_voltages,
                                       std::span<const Complex> dispatches,
                                       std::span<const Complex> loads,
                                       std::span<const std::array<Complex, 2>> flows) {
  require(bus_voltages.size() == model.buses().size(), "one voltage per bus is required");
  require(dispatches.size() == model.generators().size(), "one dispatch per generator is required");
  require(loads.size() == model.loads().size(), "one load value per load is required");
  require(flows.size() == model.lines().size(), "two flows per line are required");

  FeasibilityReport rep;
  for (std::size_t b = 0; b < model.buses().size(); ++b) {
    Complex net;
    for (std::size_t g : model.generators_at(b)) net += dispatches[g];
    for (std::size_t d : model.loads_at(b)) net -= loads[d];
    for (const LineEnd& le : model.adjacency(b)) net -= flows[le.line][le.end];
    rep.max_kcl_residual = std::max(rep.max_kcl_residual, std::abs(net));

    const Bus& bus = model.buses()[b];
    const double vm = std::abs(bus_voltages[b]);
    const std::string id = "bus " + std::to_string(b);
    check_upper(rep.bound_violations, id + " vm_max", vm, bus.v_max);
    check_lower(rep.bound_violations, id + " vm_min", vm, bus.v_min);
    if (bus.is_slack) {
      check_upper(rep.bound_violations, id + " slack angle", std::abs(std::arg(bus_voltages[b])),
                  0.0);
    }
  }

  for (std::size_t g = 0; g < dispatches.size(); ++g) {
    const Generator& gen = model.generators()[g];
    const std::string id = "gen " + std::to_string(g);
    check_upper(rep.bound_violations, id + " p_max", dispatches[g].real(), gen.s_max.real());
    check_lower(rep.bound_violations, id + " p_min", dispatches[g].real(), gen.s_min.real());
    check_upper(rep.bound_violations, id + " q_max", dispatches[g].imag(), gen.s_max.imag());
    check_lower(rep.bound_violations, id + " q_min", dispatches[g].imag(), gen.s_min.imag());
  }

  double worst = -1.0;
  for (std::size_t l = 0; l < model.lines().size(); ++l) {
    const Line& line = model.lines()[l];
    const Complex vi = bus_voltages[line.from];
    const Complex vj = bus_voltages[line.to];
    const double r = std::max(std::abs(flows[l][0] - ohm_flow(line.admittance, vi, vj)),
                              std::abs(flows[l][1] - ohm_flow(line.admittance, vj, vi)));
    rep.max_ohm_residual = std::max(rep.max_ohm_residual, r);
    if (r > worst) {
      worst = r;
      rep.worst_line = l;
    }
    const std::string id = "line " + std::to_string(l);
    check_upper(rep.bound_violations, id + " thermal from", std::abs(flows[l][0]),
                line.thermal_limit);
    check_upper(rep.bound_violations, id + " thermal to", std::abs(flows[l][1]),
                line.thermal_limit);
    check_upper(rep.bound_violations, id + " angle", std::abs(std::arg(vi * std::conj(vj))),
                line.angle_limit);
  }
  return rep;
}

double line_copy_ohm_residual(const NetworkModel& model,
                              std::span<const std::array<Complex, 2>> flows,
                              std::span<const std::array<Complex, 2>> voltages) {
  require(flows.size() == model.lines().size() && voltages.size() == model.lines().size(),
          "line-side copies must cover every line");
  double worst = 0.0;
  for (std::size_t l = 0; l < flows.size(); ++l) {
    const Complex y = model.lines()[l].admittance;
    worst = std::max({worst, std::abs(flows[l][0] - ohm_flow(y, voltages[l][0], voltages[l][1])),
                      std::abs(flows[l][1] - ohm_flow(y, voltages[l][1], voltages[l][0]))});
  }
  return worst;
}

double dispatch_cost(const NetworkModel& model, std::span<const Complex> dispatches) {
  require(dispatches.size() == model.generators().size(), "one dispatch per generator is required");
  double total = 0.0;
  for (std::size_t g = 0; g < dispatches.size(); ++g) {
    total += model.generators()[g].cost(dispatches[g].real());
  }
  return total;
}

bool FidelityReport::all_in_band() const {
  return std::all_of(per_generator_in_band.begin(), per_generator_in_band.end(),
                     [](bool b) { return b; });
}

FidelityReport fidelity_report(const NetworkModel& model, std::span<const Complex> dispatches,
                               double beta) {
  require(dispatches.size() == model.generators().size(), "one dispatch per generator is required");
  FidelityReport rep;
  for (std::size_t g = 0; g < dispatches.size(); ++g) {
    const Generator& gen = model.generators()[g];
    if (!gen.reference_cost) {
      throw ValidationError(ValidationError::Kind::MissingReferenceCost,
                            "generator " + std::to_string(g) + " has no reference cost");
    }
    const double ref = *gen.reference_cost;
    const double cost = gen.cost(dispatches[g].real());
    double lo = ref * (1.0 - beta);
    double hi = ref * (1.0 + beta);
    if (lo > hi) std::swap(lo, hi);
    rep.per_generator_in_band.push_back(lo <= cost && cost <= hi);
    rep.total_cost += cost;
    rep.reference_total += ref;
  }
  if (rep.reference_total == 0.0) {
    throw ValidationError(ValidationError::Kind::ZeroReferenceCost,
                          "total reference cost is zero; relative gap is undefined");
  }
  const double diff = rep.total_cost - rep.reference_total;
  rep.relative_gap = std::abs(diff) / std::abs(rep.reference_total);
  rep.percent_diff = 100.0 * diff / rep.reference_total;
  return rep;
}

double privacy_loss(std::span<const Complex> hat_loads, std::span<const Complex> tilde_loads) {
  require(hat_loads.size() == tilde_loads.size(), "load vectors differ in length");
  double total = 0.0;
  for (std::size_t d = 0; d < hat_loads.size(); ++d) total += std::norm(hat_loads[d] - tilde_loads[d]);
  return total;
}

}  // namespace pdopf
