#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "pdopf/agents.hpp"
#include "pdopf/errors.hpp"
#include "oracles.hpp"

namespace pdopf {
namespace {

using namespace testing;

TEST(LoadAgent, Examples) {
  EXPECT_EQ(solve_load_agent(2.0, {}, {1.0, 1.0}, {1.0, 1.0}), Complex(1.0, 1.0));
  EXPECT_NEAR(solve_load_agent(1e-12, {}, {0.7, -0.2}, {5.0, 5.0}).real(), 0.7, 1e-11);
  const Complex s = solve_load_agent(2.0, {0.1, 0.1}, {0.5, 0.5}, {0.3, 0.3});
  EXPECT_NEAR(s.real(), 0.375, 1e-15);
  EXPECT_NEAR(s.imag(), 0.375, 1e-15);
}

TEST(LoadAgent, MatchesDescentOracle) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const double rho = std::exp(u(gen) * 2.0);
    const Complex lambda{u(gen), u(gen)}, tilde{u(gen), u(gen)}, bus{u(gen), u(gen)};
    const Complex got = solve_load_agent(rho, lambda, tilde, bus);
    // (x - t)^2 + l x + rho/2 (x - b)^2 = (1 + rho/2) x^2 + (l - 2t - rho b) x + const
    const double inf = std::numeric_limits<double>::infinity();
    const double re = descend_1d(1 + rho / 2, lambda.real() - 2 * tilde.real() - rho * bus.real(),
                                 -inf, inf, 0.0);
    const double im = descend_1d(1 + rho / 2, lambda.imag() - 2 * tilde.imag() - rho * bus.imag(),
                                 -inf, inf, 0.0);
    EXPECT_NEAR(got.real(), re, 1e-8);
    EXPECT_NEAR(got.imag(), im, 1e-8);
  }
}

// ---------------------------------------------------------------------------
// Generator agent

TEST(GeneratorAgent, InteriorTargetIsReturned) {
  const Generator g = make_gen(0.0, 1.0, 0.0, 1.0, 0.0, 2.0);
  EXPECT_EQ(solve_generator_agent(1.0, {}, {1.05, 0.2}, g, 0.1), Complex(1.05, 0.2));
}

TEST(GeneratorAgent, LinearBandClampsToUpperEdge) {
  const Generator g = make_gen(0.0, 1.0, 0.0, 1.0, 0.0, 2.0);
  const Complex s = solve_generator_agent(1.0, {}, {2.0, 0.0}, g, 0.1);
  EXPECT_NEAR(s.real(), 1.1, 1e-12);
  EXPECT_TRUE(in_band(g, 0.1, s.real()));
  EXPECT_NEAR(grid_oracle(g, 0.1, 1.0, 0.0, 2.0, 1e-6), s.real(), 1e-9);
}

TEST(GeneratorAgent, ZeroBetaCollapsesBand) {
  const Generator g = make_gen(1.0, 0.0, 0.0, 1.0, 0.0, 2.0);
  for (double pb : {0.0, 0.3, 1.0, 1.7, 2.0}) {
    EXPECT_EQ(solve_generator_agent(3.0, {}, {pb, 0.0}, g, 0.0).real(), 1.0) << pb;
  }
}

TEST(GeneratorAgent, ReactiveClamp) {
  const Generator g = make_gen(0.0, 1.0, 0.0, 1.0, 0.0, 2.0, -0.5, 0.5);
  EXPECT_EQ(solve_generator_agent(2.0, {0.0, -4.0}, {1.0, 0.0}, g, 0.1).imag(), 0.5);
  EXPECT_EQ(solve_generator_agent(2.0, {0.0, 0.4}, {1.0, 0.1}, g, 0.1).imag(), -0.1);
}

TEST(GeneratorAgent, TwoIntervalBand) {
  // cost (p - 1)^2 + 0.5 over [0, 2]; band [0.9, 1.1] splits into two pieces
  // on either side of the vertex at p = 1.
  const Generator g = make_gen(1.0, -2.0, 1.5, 1.0, 0.0, 2.0);
  const auto iv = cost_band_intervals(g, 0.1);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_NEAR(iv[0].lo, 1 - std::sqrt(0.6), 1e-12);
  EXPECT_NEAR(iv[0].hi, 1 - std::sqrt(0.4), 1e-12);
  EXPECT_NEAR(iv[1].lo, 1 + std::sqrt(0.4), 1e-12);
  EXPECT_NEAR(iv[1].hi, 1 + std::sqrt(0.6), 1e-12);
  for (const Interval& i : iv) {
    EXPECT_TRUE(in_band(g, 0.1, i.lo));
    EXPECT_TRUE(in_band(g, 0.1, i.hi));
  }
  // Target at the vertex: both pieces are equally close up to rounding.
  const double p = solve_generator_agent(1.0, {}, {1.0, 0.0}, g, 0.1).real();
  EXPECT_TRUE(p == iv[0].hi || p == iv[1].lo);
  EXPECT_EQ(solve_generator_agent(1.0, {}, {0.9, 0.0}, g, 0.1).real(), iv[0].hi);
  EXPECT_EQ(solve_generator_agent(1.0, {}, {1.1, 0.0}, g, 0.1).real(), iv[1].lo);
}

TEST(GeneratorAgent, MatchesGridOracle) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double c2 = 2.0 * u(gen), c1 = 4.0 * u(gen) - 2.0, c0 = u(gen);
    const Generator base = make_gen(c2, c1, c0, 0.0, 0.0, 2.0);
    const double ref = base.cost(2.0 * u(gen));
    const Generator g = make_gen(c2, c1, c0, ref, 0.0, 2.0);
    const double beta = 0.05 + 0.15 * u(gen);
    const double rho = 0.5 + 10 * u(gen), lambda = 2 * u(gen) - 1, pb = 3 * u(gen) - 0.5;
    const double want = grid_oracle(g, beta, rho, lambda, pb, 1e-5);
    ASSERT_FALSE(std::isnan(want));
    const double got = solve_generator_agent(rho, {lambda, 0.0}, {pb, 0.0}, g, beta).real();
    EXPECT_TRUE(in_band(g, beta, got)) << k;
    auto obj = [&](double p) { return lambda * p + rho / 2 * (p - pb) * (p - pb); };
    EXPECT_LE(obj(got), obj(want) + 1e-12) << k;
    EXPECT_NEAR(got, want, 1e-8) << k;
  }
}

TEST(GeneratorAgent, InfeasibleBandThrows) {
  // Cost reaches at most 2 on [0, 1] but the band starts at 4.5.
  const Generator g = make_gen(1.0, 1.0, 0.0, 5.0, 0.0, 1.0);
  try {
    solve_generator_agent(1.0, {}, {0.5, 0.0}, g, 0.1, 3);
    FAIL();
  } catch (const InfeasibleCostBand& e) {
    EXPECT_EQ(e.generator(), 3u);
  }
  Generator missing = g;
  missing.reference_cost.reset();
  EXPECT_THROW(cost_band_intervals(missing, 0.1), ValidationError);
}

// ---------------------------------------------------------------------------
// Bus agent

TEST(BusAgent, BalancedTargetsAreFixed) {
  const std::vector<PowerCoupling> p{{Attachment::Generator, {}, {1.0, 0.5}},
                                     {Attachment::Load, {}, {0.25, 0.25}},
                                     {Attachment::Flow, {}, {0.75, 0.25}}};
  const BusResponse r = solve_bus_agent(4.0, p, {});
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_EQ(r.powers[k], p[k].target);
  EXPECT_FALSE(r.voltage.has_value());
}

TEST(BusAgent, SingleFlowIsForcedToZero) {
  const std::vector<PowerCoupling> p{{Attachment::Flow, {}, {0.3, -0.2}}};
  const std::vector<VoltageCoupling> v{{{}, {1.0, 0.1}}};
  const BusResponse r = solve_bus_agent(1.0, p, v);
  EXPECT_EQ(r.powers[0], Complex(0.0, 0.0));
  EXPECT_EQ(*r.voltage, Complex(1.0, 0.1));
}

TEST(BusAgent, ImbalanceIsSharedEqually) {
  const std::vector<PowerCoupling> p{{Attachment::Generator, {}, {1.0, 0.0}},
                                     {Attachment::Load, {}, {0.4, 0.0}},
                                     {Attachment::Flow, {}, {0.7, 0.0}}};
  const BusResponse r = solve_bus_agent(1.0, p, {});
  const auto want = kkt_oracle(1.0, {0, 0, 0}, {1.0, 0.4, 0.7}, {1, -1, -1});
  EXPECT_NEAR(r.powers[0].real(), 1.0 + 0.1 / 3, 1e-15);
  EXPECT_NEAR(r.powers[1].real(), 0.4 - 0.1 / 3, 1e-15);
  EXPECT_NEAR(r.powers[2].real(), 0.7 - 0.1 / 3, 1e-15);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.powers[k].real(), want[k], 1e-10);
}

TEST(BusAgent, MatchesKktOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double rho = std::exp(3 * u(gen));
    std::vector<PowerCoupling> p;
    const int ng = trial % 3, nd = (trial / 3) % 2, nf = 1 + trial % 4;
    for (int i = 0; i < ng; ++i) p.push_back({Attachment::Generator, {u(gen), u(gen)}, {u(gen), u(gen)}});
    for (int i = 0; i < nd; ++i) p.push_back({Attachment::Load, {u(gen), u(gen)}, {u(gen), u(gen)}});
    for (int i = 0; i < nf; ++i) p.push_back({Attachment::Flow, {u(gen), u(gen)}, {u(gen), u(gen)}});
    std::vector<VoltageCoupling> v;
    for (int i = 0; i < nf; ++i) v.push_back({{u(gen), u(gen)}, {1 + 0.1 * u(gen), 0.1 * u(gen)}});
    const BusResponse r = solve_bus_agent(rho, p, v);

    Complex balance;
    for (int part = 0; part < 2; ++part) {
      std::vector<double> m, t, a;
      for (const PowerCoupling& c : p) {
        m.push_back(part ? c.multiplier.imag() : c.multiplier.real());
        t.push_back(part ? c.target.imag() : c.target.real());
        a.push_back(balance_sign(c.kind));
      }
      const auto want = kkt_oracle(rho, m, t, a);
      for (std::size_t k = 0; k < p.size(); ++k) {
        EXPECT_NEAR(part ? r.powers[k].imag() : r.powers[k].real(), want[k], 1e-8);
      }
    }
    for (std::size_t k = 0; k < p.size(); ++k) balance += balance_sign(p[k].kind) * r.powers[k];
    EXPECT_LE(std::abs(balance), 1e-12);

    Complex mean;
    for (const VoltageCoupling& c : v) mean += c.target - c.multiplier / rho;
    mean /= static_cast<double>(v.size());
    EXPECT_LE(std::abs(*r.voltage - mean), 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Line agent

TEST(LineAgent, FeasibleTargetIsFixedPoint) {
  LineProblem p = two_bus_problem(10.0, INFINITY);
  const PolarVoltages x{1.03, 0.0, 0.96, -0.1};
  const auto s = line_flows(p.admittance, x);
  for (int e = 0; e < 2; ++e) p.ends[e] = {{}, {}, s[e], {}};
  p.ends[0].voltage_target = voltage_from_polar(1.03, 0.0);
  p.ends[1].voltage_target = voltage_from_polar(0.96, -0.1);
  const LineSolution sol = solve_line_agent(p, x);
  EXPECT_NEAR(sol.polar.vm_from, 1.03, 1e-10);
  EXPECT_NEAR(sol.polar.vm_to, 0.96, 1e-10);
  EXPECT_NEAR(sol.polar.va_to, -0.1, 1e-10);
  EXPECT_EQ(sol.polar.va_from, 0.0);
  EXPECT_LE(sol.objective, 1e-18);
  for (double g : line_objective_gradient(p, sol.polar)) EXPECT_NEAR(g, 0.0, 1e-8);
}

TEST(LineAgent, MatchesGridSearch) {
  const LineProblem p = two_bus_problem(5.0, INFINITY);
  double want = 0.0;
  const auto at = grid_search(p, want);
  const LineSolution sol = solve_line_agent(p, {});
  EXPECT_NEAR(sol.objective, want, 1e-6);
  EXPECT_LE(sol.objective, want + 1e-12);
  EXPECT_NEAR(sol.polar.vm_from, at[0], 1e-4);
  EXPECT_NEAR(sol.polar.vm_to, at[1], 1e-4);
  EXPECT_NEAR(sol.polar.va_to, at[2], 1e-4);
  EXPECT_NEAR(oracle_objective(p, sol.polar.vm_from, 0.0, sol.polar.vm_to, sol.polar.va_to),
              sol.objective, 1e-12);
}

TEST(LineAgent, MatchesGridSearchWithActiveThermalLimit) {
  const LineProblem p = two_bus_problem(5.0, 0.6);
  const LineSolution sol = solve_line_agent(p, {});
  EXPECT_LE(line_constraint_violation(p, sol.polar), 1e-8);
  EXPECT_GE(std::abs(sol.flow[0]), 0.6 - 1e-6);  // the limit binds
  double want = 0.0;
  grid_search(p, want);
  EXPECT_NEAR(sol.objective, want, 1e-6);
}

TEST(LineAgent, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LineProblem p = two_bus_problem(3.0, INFINITY);
  p.admittance = {2.0, -12.0};
  p.ends[1].flow_multiplier = {-0.3, 0.2};
  p.ends[0].voltage_multiplier = {0.05, 0.1};
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const std::array<double, 4> x{1.0 + 0.09 * u(gen), 0.3 * u(gen), 1.0 + 0.09 * u(gen),
                                  0.3 * u(gen)};
    const auto g = line_objective_gradient(p, PolarVoltages::from_array(x));
    for (int i = 0; i < 4; ++i) {
      auto hi = x, lo = x;
      hi[i] += h;
      lo[i] -= h;
      const double fd = (line_objective(p, PolarVoltages::from_array(hi)) -
                         line_objective(p, PolarVoltages::from_array(lo))) /
                        (2 * h);
      EXPECT_NEAR(g[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << k << ' ' << i;
    }
  }
}

TEST(LineAgent, OutputsRespectLimitsAndOhmsLaw) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    LineProblem p;
    p.rho = std::exp(4 * u(gen) + 2);
    p.admittance = Complex(1.0 + u(gen), -8.0 + 3 * u(gen));
    p.slack = {k % 3 == 0, k % 3 == 1};
    p.thermal_limit = k % 2 ? INFINITY : 0.5 + 0.4 * u(gen);
    p.angle_limit = 0.2 + 0.1 * u(gen);
    for (auto& e : p.ends) {
      e.flow_target = {2 * u(gen), 2 * u(gen)};
      e.voltage_target = std::polar(1.0 + 0.2 * u(gen), 0.4 * u(gen));
      e.flow_multiplier = {u(gen), u(gen)};
      e.voltage_multiplier = {u(gen), u(gen)};
    }
    const LineSolution sol = solve_line_agent(p, {});
    EXPECT_LE(line_constraint_violation(p, sol.polar), 1e-8) << k;
    const auto f = oracle_flows(p.admittance, sol.polar.vm_from, sol.polar.va_from,
                                sol.polar.vm_to, sol.polar.va_to);
    for (int e = 0; e < 2; ++e) {
      EXPECT_LE(std::abs(sol.flow[e] - f[e]), 1e-12) << k;
      if (p.slack[e]) EXPECT_EQ(e == 0 ? sol.polar.va_from : sol.polar.va_to, 0.0);
    }
    EXPECT_EQ(sol.voltage[0], voltage_from_polar(sol.polar.vm_from, sol.polar.va_from));
    // Same inputs, same answer.
    const LineSolution again = solve_line_agent(p, {});
    EXPECT_EQ(again.polar, sol.polar);
  }
}

TEST(LineAgent, ConfigValidation) {
  LineSolverConfig cfg;
  cfg.max_newton_iters = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace pdopf
