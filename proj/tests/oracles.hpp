#pragma once

// Brute-force reference solvers for the agent subproblems. They share no
// code with the library beyond the data types.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "pdopf/agents.hpp"
#include "pdopf/network.hpp"

namespace pdopf::testing {


// Projected gradient descent on a convex quadratic in one variable.
inline double descend_1d(double a2, double a1, double lo, double hi, double x0) {
  double x = std::clamp(x0, lo, hi);
  const double step = 1.0 / (2.0 * a2);
  for (int it = 0; it < 100000; ++it) {
    const double next = std::clamp(x - step * (2.0 * a2 * x + a1), lo, hi);
    if (std::abs(next - x) <= 1e-15) return next;
    x = next;
  }
  return x;
}



inline Generator make_gen(double c2, double c1, double c0, double ref, double pl, double pu,
                   double ql = -1.0, double qu = 1.0) {
  Generator g;
  g.s_min = {pl, ql};
  g.s_max = {pu, qu};
  g.cost_c2 = c2;
  g.cost_c1 = c1;
  g.cost_c0 = c0;
  g.reference_cost = ref;
  return g;
}

inline bool in_band(const Generator& g, double beta, double p) {
  const double c = g.cost(p);
  const double a = *g.reference_cost * (1 - beta), b = *g.reference_cost * (1 + beta);
  return p >= g.s_min.real() && p <= g.s_max.real() && c >= std::min(a, b) && c <= std::max(a, b);
}

// Dense grid, then bisection on the derivative inside the best grid cell.
// Points outside the band count as "derivative points back toward the grid
// optimum", which locates band edges as well as interior minima.
inline double grid_oracle(const Generator& g, double beta, double rho, double lambda,
                          double p_bus, double step) {
  const double lo = g.s_min.real(), hi = g.s_max.real();
  auto obj = [&](double p) { return lambda * p + rho / 2 * (p - p_bus) * (p - p_bus); };
  double best = std::numeric_limits<double>::quiet_NaN();
  const auto n = static_cast<long>((hi - lo) / step);
  for (long i = 0; i <= n; ++i) {
    const double p = lo + static_cast<double>(i) * step;
    if (in_band(g, beta, p) && (std::isnan(best) || obj(p) < obj(best))) best = p;
  }
  if (std::isnan(best)) return best;
  const double grid_best = best;
  auto slope = [&](double p) {
    if (!in_band(g, beta, p)) return p < grid_best ? -1.0 : 1.0;
    return lambda + rho * (p - p_bus);
  };
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  for (int it = 0; it < 200 && a < b; ++it) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    (slope(m) < 0.0 ? a : b) = m;
  }
  for (double c : {a, b}) {
    if (in_band(g, beta, c) && obj(c) < obj(best)) best = c;
  }
  return best;
}

// Direct KKT solve of min sum m_k x_k + rho/2 (x_k - t_k)^2 s.t. sum a_k x_k = 0.
inline std::vector<double> kkt_oracle(double rho, const std::vector<double>& m,
                               const std::vector<double>& t, const std::vector<double>& a) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd rhs(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = rho;
    k(i, n) = a[i];
    k(n, i) = a[i];
    rhs(i) = rho * t[i] - m[i];
  }
  rhs(n) = 0.0;
  const Eigen::VectorXd sol = k.fullPivLu().solve(rhs);
  return {sol.data(), sol.data() + n};
}



// Flows written out independently of the library.
inline std::array<Complex, 2> oracle_flows(Complex y, double vi, double ai, double vj, double aj) {
  const Complex a = std::polar(vi, ai), b = std::polar(vj, aj);
  return {std::conj(y) * (std::norm(a) - a * std::conj(b)),
          std::conj(y) * (std::norm(b) - b * std::conj(a))};
}

inline double oracle_objective(const LineProblem& p, double vi, double ai, double vj, double aj) {
  const auto s = oracle_flows(p.admittance, vi, ai, vj, aj);
  const std::array<Complex, 2> v{std::polar(vi, ai), std::polar(vj, aj)};
  double f = 0.0;
  auto dot = [](Complex x, Complex y) { return x.real() * y.real() + x.imag() * y.imag(); };
  for (int e = 0; e < 2; ++e) {
    const LineEndCoupling& c = p.ends[e];
    f += dot(c.flow_multiplier, s[e]) + dot(c.voltage_multiplier, v[e]);
    f += p.rho / 2 * (std::norm(s[e] - c.flow_target) + std::norm(v[e] - c.voltage_target));
  }
  return f;
}

inline bool oracle_feasible(const LineProblem& p, double vi, double ai, double vj, double aj) {
  if (vi < p.vm_min[0] || vi > p.vm_max[0] || vj < p.vm_min[1] || vj > p.vm_max[1]) return false;
  if (std::abs(ai - aj) > p.angle_limit) return false;
  const auto s = oracle_flows(p.admittance, vi, ai, vj, aj);
  return std::abs(s[0]) <= p.thermal_limit && std::abs(s[1]) <= p.thermal_limit;
}

inline LineProblem two_bus_problem(double rho, double thermal) {
  LineProblem p;
  p.rho = rho;
  p.admittance = {0.0, -10.0};
  p.slack = {true, false};
  p.thermal_limit = thermal;
  p.angle_limit = std::numbers::pi / 6;
  // Targets from the feasible point (1.02, 0, 0.97, -0.08), perturbed.
  const auto s = oracle_flows(p.admittance, 1.02, 0.0, 0.97, -0.08);
  p.ends[0].flow_target = s[0] + Complex(0.05, -0.03);
  p.ends[1].flow_target = s[1] + Complex(-0.02, 0.04);
  p.ends[0].voltage_target = std::polar(1.02, 0.0) + Complex(0.01, 0.02);
  p.ends[1].voltage_target = std::polar(0.97, -0.08) + Complex(-0.02, 0.01);
  p.ends[0].flow_multiplier = {0.1, -0.05};
  p.ends[1].voltage_multiplier = {-0.02, 0.03};
  return p;
}

// Best va_j for fixed magnitudes (slack angle at the from end). Both flow
// magnitudes grow with |va_j| on a lossless line, so the feasible angles form
// a symmetric interval found by bisection; the objective is then scanned and
// polished by golden section.
inline double best_angle(const LineProblem& p, double vi, double vj, double& f_out) {
  auto feasible = [&](double aj) { return oracle_feasible(p, vi, 0.0, vj, aj); };
  if (!feasible(0.0)) {
    f_out = INFINITY;
    return 0.0;
  }
  double lo = 0.0, hi = p.angle_limit;
  if (!feasible(hi)) {
    for (int it = 0; it < 80; ++it) {
      const double m = 0.5 * (lo + hi);
      (feasible(m) ? lo : hi) = m;
    }
    hi = lo;
  }
  auto f = [&](double aj) { return oracle_objective(p, vi, 0.0, vj, aj); };
  const double h = 1e-2;
  double best = -hi;
  for (double aj = -hi; aj <= hi; aj += h) {
    if (f(aj) < f(best)) best = aj;
  }
  if (f(hi) < f(best)) best = hi;
  double a = std::max(-hi, best - h), b = std::min(hi, best + h);
  const double phi = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double m1 = b - phi * (b - a), m2 = a + phi * (b - a);
    if (f(m1) <= f(m2)) b = m2; else a = m1;
  }
  for (double c : {a, b}) {
    if (f(c) < f(best)) best = c;
  }
  f_out = f(best);
  return best;
}

// Dense grid over (vm_i, vm_j) at spacing 1e-3 with the angle optimized
// inside, followed by a shrinking pattern search on the magnitudes.
inline std::array<double, 3> grid_search(const LineProblem& p, double& best_f) {
  std::array<double, 3> best{};
  best_f = INFINITY;
  auto consider = [&](double vi, double vj) {
    if (vi < p.vm_min[0] || vi > p.vm_max[0] || vj < p.vm_min[1] || vj > p.vm_max[1]) return false;
    double f;
    const double aj = best_angle(p, vi, vj, f);
    if (f < best_f - 1e-15) {
      best_f = f;
      best = {vi, vj, aj};
      return true;
    }
    return false;
  };
  const double h = 1e-3;
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) consider(0.9 + i * h, 0.9 + j * h);
  }
  for (double step = h; step > 1e-10; step /= 4) {
    bool moved = true;
    while (moved) {
      moved = false;
      const auto c = best;
      for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) moved |= consider(c[0] + a * step, c[1] + b * step);
      }
    }
  }
  return best;
}


}  // namespace pdopf::testing
