#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdopf/network.hpp"
#include "pdopf/types.hpp"

namespace pdopf {

struct BoundViolation {
  std::string constraint;  // e.g. "bus 2 vm_max", "line 0 thermal to"
  double amount = 0.0;

  bool operator==(const BoundViolation&) const = default;
};

struct FeasibilityReport {
  double max_kcl_residual = 0.0;
  double max_ohm_residual = 0.0;
  std::vector<BoundViolation> bound_violations;
  std::optional<std::size_t> worst_line;  // line with the largest Ohm residual
};

// Checks an operating point against the full AC model: bus balance, line
// flow equations, and voltage, generator, thermal, angle and slack limits
// (with 1e-9 slack). Flows are indexed per line as [from end, to end].
FeasibilityReport power_flow_residuals(const NetworkModel& model,
                                       std::span<const Complex> bus_voltages,
                                       std::span<const Complex> dispatches,
                                       std::span<const Complex> loads,
                                       std::span<const std::array<Complex, 2>> flows);

// Largest |S - conj(Y)(|V_e|^2 - V_e conj(V_f))| over line-side copies.
double line_copy_ohm_residual(const NetworkModel& model,
                              std::span<const std::array<Complex, 2>> flows,
                              std::span<const std::array<Complex, 2>> voltages);

// Sum of generator costs at the active parts of `dispatches`, ascending index.
double dispatch_cost(const NetworkModel& model, std::span<const Complex> dispatches);

struct FidelityReport {
  double total_cost = 0.0;
  double reference_total = 0.0;
  double relative_gap = 0.0;
  std::vector<bool> per_generator_in_band;
  double percent_diff = 0.0;  // signed, 100 (total - reference) / reference

  bool all_in_band() const;
};

FidelityReport fidelity_report(const NetworkModel& model, std::span<const Complex> dispatches,
                               double beta);

// Squared Euclidean distance over all real and imaginary components.
double privacy_loss(std::span<const Complex> hat_loads, std::span<const Complex> tilde_loads);

}  // namespace pdopf
