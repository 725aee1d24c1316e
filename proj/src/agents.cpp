#include "pdopf/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pdopf/errors.hpp"
#include "pdopf/text.hpp"

namespace pdopf {

// ---------------------------------------------------------------------------
// Load agent

Complex solve_load_agent(double rho, Complex lambda, Complex s_tilde, Complex s_bus) {
  // Same closed form as (2 s~ + rho s_B - lambda)/(2 + rho), written as an
  // offset from s~ so a consistent fixed point is reproduced bit-for-bit.
  return s_tilde + (rho * (s_bus - s_tilde) - lambda) / (2.0 + rho);
}

// ---------------------------------------------------------------------------
// Generator agent

namespace {

// Real roots of a p^2 + b p + c = 0 (a >= 0), unsorted.
std::vector<double> quadratic_roots(double a, double b, double c) {
  std::vector<double> roots;
  if (a == 0.0) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  if (q != 0.0) {
    roots.push_back(q / a);
    roots.push_back(c / q);
  } else {
    roots.push_back(0.0);
  }
  return roots;
}

struct Band {
  double lo;
  double hi;
  bool contains(double c) const { return lo <= c && c <= hi; }
};

// Moves `from` toward `inside` (which is exactly in band) until the cost at
// the returned point is exactly in band.
double tighten(const Generator& gen, const Band& band, double from, double inside) {
  if (band.contains(gen.cost(from))) return from;
  double bad = from;
  double good = inside;
  for (int it = 0; it < 200; ++it) {
    const double mid = bad + (good - bad) / 2.0;
    if (mid == bad || mid == good) break;
    (band.contains(gen.cost(mid)) ? good : bad) = mid;
  }
  return good;
}

}  // namespace

std::vector<Interval> cost_band_intervals(const Generator& gen, double beta) {
  if (!gen.reference_cost) {
    throw ValidationError(ValidationError::Kind::MissingReferenceCost,
                          "generator has no reference cost loaded");
  }
  const double ref = *gen.reference_cost;
  Band band{ref * (1.0 - beta), ref * (1.0 + beta)};
  if (band.lo > band.hi) std::swap(band.lo, band.hi);
  const double tol = 1e-12 * std::max(1.0, std::abs(ref));
  const Band loose{band.lo - tol, band.hi + tol};

  const double pl = gen.s_min.real();
  const double pu = gen.s_max.real();

  std::vector<double> pts{pl, pu};
  for (double level : {band.lo, band.hi}) {
    for (double r : quadratic_roots(gen.cost_c2, gen.cost_c1, gen.cost_c0 - level)) {
      if (r > pl && r < pu) pts.push_back(r);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // Membership is constant between consecutive breakpoints; probe the
  // breakpoints themselves and the midpoints of the gaps.
  std::vector<Interval> raw;
  auto add = [&raw](double a, double b) {
    if (!raw.empty() && a <= raw.back().hi) {
      raw.back().hi = std::max(raw.back().hi, b);
    } else {
      raw.push_back({a, b});
    }
  };
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (loose.contains(gen.cost(pts[k]))) add(pts[k], pts[k]);
    if (k + 1 < pts.size()) {
      const double mid = pts[k] + (pts[k + 1] - pts[k]) / 2.0;
      if (loose.contains(gen.cost(mid))) add(pts[k], pts[k + 1]);
    }
  }

  std::vector<Interval> out;
  for (const Interval& iv : raw) {
    const double mid = iv.lo + (iv.hi - iv.lo) / 2.0;
    if (iv.lo < iv.hi && band.contains(gen.cost(mid))) {
      out.push_back({tighten(gen, band, iv.lo, mid), tighten(gen, band, iv.hi, mid)});
      continue;
    }
    // Degenerate or nearly so (a collapsed band): look a few ulps around for
    // a point whose cost lands exactly in band, else keep the inflated point.
    double best = mid;
    double up = mid;
    double down = mid;
    for (int k = 0; k < 64 && !band.contains(gen.cost(best)); ++k) {
      up = std::nextafter(up, pu);
      down = std::nextafter(down, pl);
      if (band.contains(gen.cost(up))) best = up;
      else if (band.contains(gen.cost(down))) best = down;
    }
    out.push_back({best, best});
  }
  return out;
}

Complex solve_generator_agent(double rho, Complex lambda, Complex s_bus, const Generator& gen,
                              double beta, std::size_t generator_index) {
  const auto intervals = cost_band_intervals(gen, beta);
  if (intervals.empty()) {
    throw InfeasibleCostBand(
        generator_index,
        "generator " + std::to_string(generator_index) + ": cost band [" +
            format_double(*gen.reference_cost * (1.0 - beta)) + ", " +
            format_double(*gen.reference_cost * (1.0 + beta)) + "] does not meet P bounds [" +
            format_double(gen.s_min.real()) + ", " + format_double(gen.s_max.real()) + "]");
  }
  const double unconstrained = s_bus.real() - lambda.real() / rho;
  auto objective = [&](double p) {
    const double d = p - s_bus.real();
    return lambda.real() * p + 0.5 * rho * d * d;
  };
  double best_p = std::clamp(unconstrained, intervals.front().lo, intervals.front().hi);
  double best_obj = objective(best_p);
  for (std::size_t k = 1; k < intervals.size(); ++k) {
    const double p = std::clamp(unconstrained, intervals[k].lo, intervals[k].hi);
    const double obj = objective(p);
    if (obj < best_obj) {
      best_obj = obj;
      best_p = p;
    }
  }
  const double q =
      std::clamp(s_bus.imag() - lambda.imag() / rho, gen.s_min.imag(), gen.s_max.imag());
  return {best_p, q};
}

// ---------------------------------------------------------------------------
// Bus agent

BusResponse solve_bus_agent(double rho, std::span<const PowerCoupling> powers,
                            std::span<const VoltageCoupling> voltages) {
  BusResponse out;
  out.powers.reserve(powers.size());

  // Unconstrained minimizers, then one KKT shift along the balance normal.
  Complex imbalance;
  double norm2 = 0.0;
  for (const PowerCoupling& c : powers) {
    const Complex u = c.target - c.multiplier / rho;
    const double a = balance_sign(c.kind);
    out.powers.push_back(u);
    imbalance += a * u;
    norm2 += a * a;
  }
  if (norm2 > 0.0) {
    const Complex shift = imbalance / norm2;
    for (std::size_t k = 0; k < powers.size(); ++k) {
      out.powers[k] -= balance_sign(powers[k].kind) * shift;
    }
  }

  if (!voltages.empty()) {
    // Mean of the proximal targets, accumulated as offsets from the first.
    const Complex first = voltages.front().target - voltages.front().multiplier / rho;
    Complex offset;
    for (std::size_t k = 1; k < voltages.size(); ++k) {
      offset += (voltages[k].target - voltages[k].multiplier / rho) - first;
    }
    out.voltage = first + offset / static_cast<double>(voltages.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Line agent

Complex voltage_from_polar(double vm, double va) {
  return {vm * std::cos(va), vm * std::sin(va)};
}

std::array<Complex, 2> line_flows(Complex admittance, const PolarVoltages& v) {
  const Complex vf = voltage_from_polar(v.vm_from, v.va_from);
  const Complex vt = voltage_from_polar(v.vm_to, v.va_to);
  const Complex yc = std::conj(admittance);
  return {yc * (v.vm_from * v.vm_from - vf * std::conj(vt)),
          yc * (v.vm_to * v.vm_to - vt * std::conj(vf))};
}

LineProblem LineProblem::from_model(const NetworkModel& model, std::size_t line, double rho,
                                    const std::array<LineEndCoupling, 2>& ends) {
  const Line& l = model.lines()[line];
  const Bus& bf = model.buses()[l.from];
  const Bus& bt = model.buses()[l.to];
  LineProblem p;
  p.rho = rho;
  p.ends = ends;
  p.admittance = l.admittance;
  p.vm_min = {bf.v_min, bt.v_min};
  p.vm_max = {bf.v_max, bt.v_max};
  p.slack = {bf.is_slack, bt.is_slack};
  p.thermal_limit = l.thermal_limit;
  p.angle_limit = l.angle_limit;
  return p;
}

void LineSolverConfig::validate() const {
  if (!(stationarity_tol > 0.0) || max_newton_iters <= 0 || !(constraint_penalty_init > 0.0) ||
      !(penalty_growth > 0.0) || max_outer_iters <= 0 || !(feasibility_tol > 0.0)) {
    throw ConfigError("line solver settings must all be positive");
  }
}

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// A scalar function of (vm_from, va_from, vm_to, va_to) with its first and
// second derivatives.
struct Smooth {
  double value = 0.0;
  Vec4 grad = Vec4::Zero();
  Mat4 hess = Mat4::Zero();
};

// Real and imaginary parts of the flow leaving end `e`, in polar variables.
std::array<Smooth, 2> flow_terms(Complex y, const Vec4& th, int e) {
  const double g = y.real();
  const double b = y.imag();
  // Local coordinates (v1, v2, d) and their embedding in theta.
  const int i1 = e == 0 ? 0 : 2;
  const int i2 = e == 0 ? 2 : 0;
  const int a1 = e == 0 ? 1 : 3;
  const int a2 = e == 0 ? 3 : 1;
  const double v1 = th[i1];
  const double v2 = th[i2];
  const double d = th[a1] - th[a2];
  const double cd = std::cos(d);
  const double sd = std::sin(d);
  const double A = g * cd + b * sd;
  const double Ad = -g * sd + b * cd;
  const double B = g * sd - b * cd;

  Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
  m(0, i1) = 1.0;
  m(1, i2) = 1.0;
  m(2, a1) = 1.0;
  m(2, a2) = -1.0;

  Eigen::Vector3d gp(2.0 * g * v1 - v2 * A, -v1 * A, -v1 * v2 * Ad);
  Eigen::Matrix3d hp;
  hp << 2.0 * g, -A, -v2 * Ad,
        -A, 0.0, -v1 * Ad,
        -v2 * Ad, -v1 * Ad, v1 * v2 * A;
  Eigen::Vector3d gq(-2.0 * b * v1 - v2 * B, -v1 * B, -v1 * v2 * A);
  Eigen::Matrix3d hq;
  hq << -2.0 * b, -B, -v2 * A,
        -B, 0.0, -v1 * A,
        -v2 * A, -v1 * A, v1 * v2 * B;

  Smooth p{g * v1 * v1 - v1 * v2 * A, m.transpose() * gp, m.transpose() * hp * m};
  Smooth q{-b * v1 * v1 - v1 * v2 * B, m.transpose() * gq, m.transpose() * hq * m};
  return {p, q};
}

std::array<Smooth, 2> voltage_terms(const Vec4& th, int e) {
  const int iv = e == 0 ? 0 : 2;
  const int ia = iv + 1;
  const double vm = th[iv];
  const double c = std::cos(th[ia]);
  const double s = std::sin(th[ia]);
  Smooth re, im;
  re.value = vm * c;
  re.grad[iv] = c;
  re.grad[ia] = -vm * s;
  re.hess(iv, ia) = re.hess(ia, iv) = -s;
  re.hess(ia, ia) = -vm * c;
  im.value = vm * s;
  im.grad[iv] = s;
  im.grad[ia] = vm * c;
  im.hess(iv, ia) = im.hess(ia, iv) = c;
  im.hess(ia, ia) = -vm * s;
  return {re, im};
}

// The eight real coupled quantities, in the order
// Re S_0, Im S_0, Re S_1, Im S_1, Re V_0, Im V_0, Re V_1, Im V_1.
std::array<Smooth, 8> coupled_terms(Complex y, const Vec4& th) {
  const auto f0 = flow_terms(y, th, 0);
  const auto f1 = flow_terms(y, th, 1);
  const auto v0 = voltage_terms(th, 0);
  const auto v1 = voltage_terms(th, 1);
  return {f0[0], f0[1], f1[0], f1[1], v0[0], v0[1], v1[0], v1[1]};
}

struct Coupling {
  std::array<double, 8> multiplier;
  std::array<double, 8> target;
};

Coupling coupling_of(const LineProblem& p) {
  Coupling c;
  for (int e = 0; e < 2; ++e) {
    const LineEndCoupling& end = p.ends[e];
    c.multiplier[2 * e] = end.flow_multiplier.real();
    c.multiplier[2 * e + 1] = end.flow_multiplier.imag();
    c.multiplier[4 + 2 * e] = end.voltage_multiplier.real();
    c.multiplier[4 + 2 * e + 1] = end.voltage_multiplier.imag();
    c.target[2 * e] = end.flow_target.real();
    c.target[2 * e + 1] = end.flow_target.imag();
    c.target[4 + 2 * e] = end.voltage_target.real();
    c.target[4 + 2 * e + 1] = end.voltage_target.imag();
  }
  return c;
}

Vec4 to_vec(const PolarVoltages& v) { return {v.vm_from, v.va_from, v.vm_to, v.va_to}; }
PolarVoltages to_polar(const Vec4& t) { return {t[0], t[1], t[2], t[3]}; }

// Inequality constraints g_k(theta) <= 0 handled by the augmented Lagrangian:
// two angle-difference sides and one thermal limit per end.
constexpr int kConstraints = 4;

std::array<Smooth, kConstraints> constraint_terms(const LineProblem& p, const Vec4& th,
                                                  const std::array<Smooth, 8>& x) {
  std::array<Smooth, kConstraints> out;
  const double d = th[1] - th[3];
  out[0].value = d - p.angle_limit;
  out[0].grad << 0.0, 1.0, 0.0, -1.0;
  out[1].value = -d - p.angle_limit;
  out[1].grad << 0.0, -1.0, 0.0, 1.0;
  for (int e = 0; e < 2; ++e) {
    Smooth& c = out[2 + e];
    if (!std::isfinite(p.thermal_limit)) {
      c.value = -1.0;
      continue;
    }
    const double inv = 1.0 / (p.thermal_limit * p.thermal_limit);
    const Smooth& P = x[2 * e];
    const Smooth& Q = x[2 * e + 1];
    c.value = (P.value * P.value + Q.value * Q.value) * inv - 1.0;
    c.grad = 2.0 * inv * (P.value * P.grad + Q.value * Q.grad);
    c.hess = 2.0 * inv *
             (P.grad * P.grad.transpose() + P.value * P.hess + Q.grad * Q.grad.transpose() +
              Q.value * Q.hess);
  }
  return out;
}

// Minimizes, over the box, 1/2 |x(theta) - T|^2 plus the PHR penalty terms
// for the inequality constraints, where T = target - multiplier / rho.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(const LineProblem& p, const Coupling& c) : p_(p) {
    for (int k = 0; k < 8; ++k) shifted_[k] = c.target[k] - c.multiplier[k] / p.rho;
    for (int e = 0; e < 2; ++e) {
      lo_[2 * e] = p.vm_min[e];
      hi_[2 * e] = p.vm_max[e];
      if (p.slack[e]) {
        lo_[2 * e + 1] = hi_[2 * e + 1] = 0.0;
      } else {
        lo_[2 * e + 1] = -std::numeric_limits<double>::infinity();
        hi_[2 * e + 1] = std::numeric_limits<double>::infinity();
      }
    }
  }

  std::array<double, kConstraints> mu{};
  double penalty = 1.0;

  Vec4 project(Vec4 t) const {
    for (int i = 0; i < 4; ++i) t[i] = std::clamp(t[i], lo_[i], hi_[i]);
    return t;
  }
  bool fixed(int i) const { return lo_[i] == hi_[i]; }
  double lower(int i) const { return lo_[i]; }
  double upper(int i) const { return hi_[i]; }

  double value(const Vec4& th) const {
    const auto x = coupled_terms(p_.admittance, th);
    double f = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double r = x[k].value - shifted_[k];
      f += 0.5 * r * r;
    }
    const auto g = constraint_terms(p_, th, x);
    for (int k = 0; k < kConstraints; ++k) {
      const double s = std::max(0.0, mu[k] + penalty * g[k].value);
      f += (s * s - mu[k] * mu[k]) / (2.0 * penalty);
    }
    return f;
  }

  void derivatives(const Vec4& th, double& f, Vec4& grad, Mat4& hess) const {
    const auto x = coupled_terms(p_.admittance, th);
    f = 0.0;
    grad.setZero();
    hess.setZero();
    for (int k = 0; k < 8; ++k) {
      const double r = x[k].value - shifted_[k];
      f += 0.5 * r * r;
      grad += r * x[k].grad;
      hess += x[k].grad * x[k].grad.transpose() + r * x[k].hess;
    }
    const auto g = constraint_terms(p_, th, x);
    for (int k = 0; k < kConstraints; ++k) {
      const double s = std::max(0.0, mu[k] + penalty * g[k].value);
      f += (s * s - mu[k] * mu[k]) / (2.0 * penalty);
      if (s > 0.0) {
        grad += s * g[k].grad;
        hess += penalty * g[k].grad * g[k].grad.transpose() + s * g[k].hess;
      }
    }
  }

  std::array<double, kConstraints> constraints(const Vec4& th) const {
    const auto x = coupled_terms(p_.admittance, th);
    const auto g = constraint_terms(p_, th, x);
    std::array<double, kConstraints> out;
    for (int k = 0; k < kConstraints; ++k) out[k] = g[k].value;
    return out;
  }

  // Infinity norm of theta - P(theta - grad).
  double stationarity(const Vec4& th, const Vec4& grad) const {
    return (th - project(th - grad)).cwiseAbs().maxCoeff();
  }

 private:
  const LineProblem& p_;
  std::array<double, 8> shifted_{};
  std::array<double, 4> lo_{};
  std::array<double, 4> hi_{};
};

// Projected Newton on the box. Returns true once the projected gradient is
// below tol; iterations are added to `iters`.
bool projected_newton(const AugmentedLagrangian& al, Vec4& th, double tol, int max_iters,
                      int& iters) {
  constexpr double kArmijo = 1e-4;
  double f;
  Vec4 grad;
  Mat4 hess;
  for (int it = 0; it < max_iters; ++it) {
    al.derivatives(th, f, grad, hess);
    const double pg = al.stationarity(th, grad);
    if (pg <= tol) return true;
    ++iters;

    // Variables held at a bound by the gradient step are moved by projected
    // steepest descent; the rest get a Newton step on the reduced Hessian.
    const double active_gap = std::min(1e-6, pg);
    std::array<bool, 4> is_free{};
    std::vector<int> free_idx;
    for (int i = 0; i < 4; ++i) {
      const bool at_lo = grad[i] > 0.0 && th[i] - active_gap <= al.lower(i);
      const bool at_hi = grad[i] < 0.0 && th[i] + active_gap >= al.upper(i);
      is_free[i] = !al.fixed(i) && !at_lo && !at_hi;
      if (is_free[i]) free_idx.push_back(i);
    }
    Vec4 dir = Vec4::Zero();
    for (int i = 0; i < 4; ++i) {
      if (!is_free[i] && !al.fixed(i)) dir[i] = -grad[i];
    }
    if (!free_idx.empty()) {
      const int n = static_cast<int>(free_idx.size());
      Eigen::MatrixXd h(n, n);
      Eigen::VectorXd gf(n);
      double scale = 0.0;
      for (int a = 0; a < n; ++a) {
        gf[a] = grad[free_idx[a]];
        for (int b = 0; b < n; ++b) h(a, b) = hess(free_idx[a], free_idx[b]);
        scale = std::max(scale, std::abs(h(a, a)));
      }
      double shift = 0.0;
      Eigen::LLT<Eigen::MatrixXd> llt;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::MatrixXd hs = h;
        hs.diagonal().array() += shift;
        llt.compute(hs);
        if (llt.info() == Eigen::Success) break;
        shift = shift == 0.0 ? std::max(1e-10 * scale, 1e-12) : 10.0 * shift;
      }
      const Eigen::VectorXd step = llt.solve(-gf);
      for (int a = 0; a < n; ++a) dir[free_idx[a]] = step[a];
    }

    // Close to the solution the predicted decrease of f falls below its
    // rounding noise, so a full step that halves the projected gradient only
    // has to keep f within a small tolerance. Otherwise, Armijo backtracking
    // along the projection arc.
    bool accepted = false;
    {
      const Vec4 full = al.project(th + dir);
      double ft;
      Vec4 gt;
      Mat4 ht;
      al.derivatives(full, ft, gt, ht);
      if (full != th && al.stationarity(full, gt) <= 0.5 * pg &&
          ft <= f + 1e-12 * (1.0 + std::abs(f))) {
        th = full;
        accepted = true;
      }
    }
    double alpha = 1.0;
    for (int ls = 0; ls < 60 && !accepted; ++ls, alpha *= 0.5) {
      const Vec4 trial = al.project(th + alpha * dir);
      if (trial == th) break;
      if (al.value(trial) <= f + kArmijo * grad.dot(trial - th)) {
        th = trial;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  al.derivatives(th, f, grad, hess);
  return al.stationarity(th, grad) <= tol;
}

}  // namespace

double line_objective(const LineProblem& problem, const PolarVoltages& v) {
  const auto x = coupled_terms(problem.admittance, to_vec(v));
  const Coupling c = coupling_of(problem);
  double f = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double d = x[k].value - c.target[k];
    f += c.multiplier[k] * x[k].value + 0.5 * problem.rho * d * d;
  }
  return f;
}

std::array<double, 4> line_objective_gradient(const LineProblem& problem,
                                              const PolarVoltages& v) {
  const auto x = coupled_terms(problem.admittance, to_vec(v));
  const Coupling c = coupling_of(problem);
  Vec4 g = Vec4::Zero();
  for (int k = 0; k < 8; ++k) {
    g += (c.multiplier[k] + problem.rho * (x[k].value - c.target[k])) * x[k].grad;
  }
  return {g[0], g[1], g[2], g[3]};
}

double line_constraint_violation(const LineProblem& problem, const PolarVoltages& v) {
  const Vec4 th = to_vec(v);
  double worst = 0.0;
  for (int e = 0; e < 2; ++e) {
    worst = std::max({worst, problem.vm_min[e] - th[2 * e], th[2 * e] - problem.vm_max[e]});
    if (problem.slack[e]) worst = std::max(worst, std::abs(th[2 * e + 1]));
  }
  const auto x = coupled_terms(problem.admittance, th);
  for (const Smooth& g : constraint_terms(problem, th, x)) worst = std::max(worst, g.value);
  return worst;
}

LineSolution solve_line_agent(const LineProblem& problem, const PolarVoltages& warm_start,
                              const LineSolverConfig& cfg, std::size_t line_index) {
  AugmentedLagrangian al(problem, coupling_of(problem));
  al.penalty = cfg.constraint_penalty_init;
  Vec4 th = al.project(to_vec(warm_start));

  LineSolution sol;
  bool solved = false;
  double previous_violation = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < cfg.max_outer_iters && !solved; ++outer) {
    ++sol.outer_iterations;
    const bool stationary = projected_newton(al, th, cfg.stationarity_tol, cfg.max_newton_iters,
                                             sol.newton_iterations);
    const auto g = al.constraints(th);
    double violation = 0.0;
    for (double gk : g) violation = std::max(violation, gk);
    if (stationary && violation <= cfg.feasibility_tol) {
      solved = true;
      break;
    }
    for (int k = 0; k < kConstraints; ++k) al.mu[k] = std::max(0.0, al.mu[k] + al.penalty * g[k]);
    if (violation > 0.25 * previous_violation) al.penalty *= cfg.penalty_growth;
    previous_violation = violation;
  }
  if (!solved || !th.allFinite()) {
    throw LineSolveFailed(line_index, "line " + std::to_string(line_index) +
                                          ": subproblem did not converge within " +
                                          std::to_string(cfg.max_outer_iters) +
                                          " outer iterations");
  }

  sol.polar = to_polar(th);
  sol.flow = line_flows(problem.admittance, sol.polar);
  sol.voltage = {voltage_from_polar(th[0], th[1]), voltage_from_polar(th[2], th[3])};
  sol.objective = line_objective(problem, sol.polar);
  return sol;
}

}  // namespace pdopf
