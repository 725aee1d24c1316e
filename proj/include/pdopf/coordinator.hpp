#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdopf/agents.hpp"
#include "pdopf/network.hpp"
#include "pdopf/privacy.hpp"
#include "pdopf/types.hpp"

namespace pdopf {

struct AdmmConfig {
  double rho_init = 100.0;
  double rho_min = 5.0;
  double rho_max = 1e6;
  double scale_c = 0.02;       // relative rho step
  double threshold_ct = 7.0;   // residual ratio that triggers a rho step
  int t_max = 5000;
  double boost_fraction = 0.9;
  double primal_target = 1e-3;
  double beta = 0.1;
  int adjust_every = 1;
  bool early_stop = true;
  unsigned threads = 1;  // 0 = hardware concurrency
  LineSolverConfig line;

  void validate() const;
  // First iteration (1-based) at which boosting may be active.
  int boost_start() const;
};

struct TraceRecord {
  int iter = 0;
  double eps_p = 0.0;
  double eps_d = 0.0;
  double rho = 0.0;  // penalty used during this iteration
  double total_cost = 0.0;
  bool boosting = false;

  bool operator==(const TraceRecord&) const = default;
};

using ConvergenceTrace = std::vector<TraceRecord>;

// Agent-side copies.
struct ConsensusVars {
  std::vector<Complex> load;
  std::vector<Complex> gen;
  std::vector<std::array<Complex, 2>> flow;     // per line, [from end, to end]
  std::vector<std::array<Complex, 2>> voltage;  // per line, [from bus, to bus]
  std::vector<PolarVoltages> line_polar;        // line agents' warm starts

  bool operator==(const ConsensusVars&) const = default;
};

// Bus-side responses.
struct BusVars {
  std::vector<Complex> load;
  std::vector<Complex> gen;
  std::vector<std::array<Complex, 2>> flow;
  std::vector<Complex> voltage;  // per bus

  bool operator==(const BusVars&) const = default;
};

struct DualVars {
  std::vector<Complex> load;
  std::vector<Complex> gen;
  std::vector<std::array<Complex, 2>> flow;
  std::vector<std::array<Complex, 2>> voltage;

  bool operator==(const DualVars&) const = default;
};

struct AdmmState {
  int iteration = 0;  // completed iterations
  double rho = 0.0;   // penalty for the next iteration
  ConsensusVars x;
  BusVars z;
  DualVars duals;

  bool operator==(const AdmmState&) const = default;
};

struct AdmmResult {
  std::vector<Complex> hat_loads;
  AdmmState state;
  ConvergenceTrace trace;
  bool converged = false;
  int iterations_used = 0;
};

// Zero duals and bus powers, flat voltages, zero agent copies.
AdmmState initial_state(const NetworkModel& model, const AdmmConfig& cfg);

// Runs the fidelity phase on the obfuscated loads. Load demands stored in
// `model` are never read.
AdmmResult run_admm(const NetworkModel& model, const ObfuscatedLoads& noisy,
                    const AdmmConfig& cfg);
// Continues from `start` (warm start or resumed snapshot); iterations are
// numbered from start.iteration + 1.
AdmmResult run_admm(const NetworkModel& model, const ObfuscatedLoads& noisy,
                    const AdmmConfig& cfg, AdmmState start);

// lambda += rho (x - z) on every coupling.
DualVars update_duals(const NetworkModel& model, const AdmmState& state, double rho);

struct Residuals {
  double eps_p = 0.0;
  double eps_d = 0.0;
};

Residuals compute_residuals(const NetworkModel& model, const AdmmState& now,
                            const BusVars& previous, double rho);

bool boosting_active(int iter, double eps_p, const AdmmConfig& cfg);
double update_rho(double rho, double eps_p, double eps_d, int iter, const AdmmConfig& cfg);

// Versioned JSON snapshot with exact round-trip of every double.
std::string state_to_json(const AdmmState& state);
AdmmState state_from_json(const std::string& text);

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);
ConvergenceTrace read_trace_csv(std::istream& in);

}  // namespace pdopf
