#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pdopf/network.hpp"
#include "pdopf/types.hpp"

namespace pdopf {

// ---------------------------------------------------------------------------
// Load agent

// argmin_S |S - s_tilde|^2 + lambda.S + (rho/2)|S - s_bus|^2, componentwise
// (2 s_tilde + rho s_bus - lambda) / (2 + rho).
Complex solve_load_agent(double rho, Complex lambda, Complex s_tilde, Complex s_bus);

// ---------------------------------------------------------------------------
// Generator agent

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

// Active-power set {p in [p_min, p_max] : O*(1-beta) <= cost(p) <= O*(1+beta)}
// as at most two disjoint closed intervals, ascending. Every point of every
// returned interval satisfies both bands in floating point. Empty when the
// band is infeasible.
std::vector<Interval> cost_band_intervals(const Generator& gen, double beta);

// Active part: minimizer of lambda_p p + (rho/2)(p - p_bus)^2 over the cost
// band set (ties go to the smaller p). Reactive part: clamped proximal step.
// Throws InfeasibleCostBand when the set is empty.
Complex solve_generator_agent(double rho, Complex lambda, Complex s_bus, const Generator& gen,
                              double beta, std::size_t generator_index = 0);

// ---------------------------------------------------------------------------
// Bus agent

enum class Attachment { Generator, Load, Flow };

// Coefficient of an attachment in S_gen - S_load - sum S_flow = 0.
constexpr double balance_sign(Attachment a) { return a == Attachment::Generator ? 1.0 : -1.0; }

struct PowerCoupling {
  Attachment kind = Attachment::Flow;
  Complex multiplier;  // already negated by the caller
  Complex target;      // the agent-side copy
};

struct VoltageCoupling {
  Complex multiplier;  // already negated by the caller
  Complex target;      // the line agent's copy of this bus voltage
};

struct BusResponse {
  std::vector<Complex> powers;   // same order as the power couplings
  std::optional<Complex> voltage;  // absent when the bus has no lines
};

// Minimizes sum m_k.x_k + (rho/2)|x_k - t_k|^2 over the power variables
// subject to the bus flow balance, and the same unconstrained objective over
// the bus voltage.
BusResponse solve_bus_agent(double rho, std::span<const PowerCoupling> powers,
                            std::span<const VoltageCoupling> voltages);

// ---------------------------------------------------------------------------
// Line agent

struct PolarVoltages {
  double vm_from = 1.0;
  double va_from = 0.0;
  double vm_to = 1.0;
  double va_to = 0.0;

  std::array<double, 4> as_array() const { return {vm_from, va_from, vm_to, va_to}; }
  static PolarVoltages from_array(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  bool operator==(const PolarVoltages&) const = default;
};

Complex voltage_from_polar(double vm, double va);

// S_ef = conj(Y)(|V_e|^2 - V_e conj(V_f)) for both directions.
std::array<Complex, 2> line_flows(Complex admittance, const PolarVoltages& v);

// Multipliers and bus-side targets for one line end.
struct LineEndCoupling {
  Complex flow_multiplier;
  Complex voltage_multiplier;
  Complex flow_target;     // S^(B)_ef
  Complex voltage_target;  // V^(B)_e
};

struct LineProblem {
  double rho = 1.0;
  std::array<LineEndCoupling, 2> ends;  // [0] = from end, [1] = to end
  Complex admittance;
  std::array<double, 2> vm_min{0.9, 0.9};
  std::array<double, 2> vm_max{1.1, 1.1};
  std::array<bool, 2> slack{false, false};
  double thermal_limit = 0.0;
  double angle_limit = 0.0;

  static LineProblem from_model(const NetworkModel& model, std::size_t line, double rho,
                                const std::array<LineEndCoupling, 2>& ends);
};

struct LineSolverConfig {
  double stationarity_tol = 1e-8;
  int max_newton_iters = 100;
  double constraint_penalty_init = 1e2;
  double penalty_growth = 10.0;
  int max_outer_iters = 30;
  double feasibility_tol = 1e-8;

  void validate() const;
};

struct LineSolution {
  std::array<Complex, 2> flow;
  std::array<Complex, 2> voltage;
  PolarVoltages polar;
  double objective = 0.0;
  int newton_iterations = 0;
  int outer_iterations = 0;
};

// Objective of the line subproblem at polar voltages v:
// sum_e lambda^S.S_e + lambda^V.V_e + rho/2 (|S_e - S^B|^2 + |V_e - V^B|^2).
double line_objective(const LineProblem& problem, const PolarVoltages& v);
// Gradient with respect to (vm_from, va_from, vm_to, va_to).
std::array<double, 4> line_objective_gradient(const LineProblem& problem,
                                              const PolarVoltages& v);

// Largest violation of the line's voltage, angle and thermal limits.
double line_constraint_violation(const LineProblem& problem, const PolarVoltages& v);

// Augmented-Lagrangian outer loop on the angle-difference and thermal
// constraints around a projected-Newton inner solve on the voltage-magnitude
// box (slack angles are held at zero). Flows are recomputed from the final
// voltages. Throws LineSolveFailed when the budget is exhausted.
LineSolution solve_line_agent(const LineProblem& problem, const PolarVoltages& warm_start,
                              const LineSolverConfig& cfg = {}, std::size_t line_index = 0);

}  // namespace pdopf
