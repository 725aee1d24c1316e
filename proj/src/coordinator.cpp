#include "pdopf/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include <json.hpp>

#include "pdopf/errors.hpp"
#include "pdopf/text.hpp"
#include "thread_pool.hpp"

namespace pdopf {

void AdmmConfig::validate() const {
  if (!(rho_min > 0.0) || !(rho_min <= rho_init) || !(rho_init <= rho_max)) {
    throw ConfigError("rho bounds must satisfy 0 < rho_min <= rho_init <= rho_max");
  }
  if (!(boost_fraction > 0.0 && boost_fraction < 1.0)) {
    throw ConfigError("boost_fraction must lie in (0, 1)");
  }
  if (t_max < 1) throw ConfigError("t_max must be at least 1");
  if (adjust_every < 1) throw ConfigError("adjust_every must be at least 1");
  if (!(scale_c > 0.0) || !(threshold_ct > 0.0)) {
    throw ConfigError("scale_c and threshold_ct must be positive");
  }
  if (!(primal_target > 0.0)) throw ConfigError("primal_target must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be non-negative");
  line.validate();
}

int AdmmConfig::boost_start() const {
  return static_cast<int>(std::ceil(boost_fraction * static_cast<double>(t_max)));
}

bool boosting_active(int iter, double eps_p, const AdmmConfig& cfg) {
  return iter >= cfg.boost_start() && eps_p > cfg.primal_target;
}

double update_rho(double rho, double eps_p, double eps_d, int iter, const AdmmConfig& cfg) {
  const double up = std::min((1.0 + cfg.scale_c) * rho, cfg.rho_max);
  if (boosting_active(iter, eps_p, cfg)) return up;
  double next = rho;
  if (eps_p > cfg.threshold_ct * eps_d) {
    next = up;
  } else if (eps_d > cfg.threshold_ct * eps_p) {
    next = std::max(rho / (1.0 + cfg.scale_c), cfg.rho_min);
  }
  // Once the boosting window opens, rho is only ever raised.
  if (iter >= cfg.boost_start()) next = std::max(next, rho);
  return next;
}

AdmmState initial_state(const NetworkModel& model, const AdmmConfig& cfg) {
  const std::size_t nl = model.loads().size();
  const std::size_t ng = model.generators().size();
  const std::size_t nb = model.buses().size();
  const std::size_t ne = model.lines().size();
  const Complex one{1.0, 0.0};
  AdmmState s;
  s.rho = cfg.rho_init;
  s.x.load.assign(nl, {});
  s.x.gen.assign(ng, {});
  s.x.flow.assign(ne, {});
  s.x.voltage.assign(ne, {one, one});
  s.x.line_polar.assign(ne, PolarVoltages{});
  s.z.load.assign(nl, {});
  s.z.gen.assign(ng, {});
  s.z.flow.assign(ne, {});
  s.z.voltage.assign(nb, one);
  s.duals.load.assign(nl, {});
  s.duals.gen.assign(ng, {});
  s.duals.flow.assign(ne, {});
  s.duals.voltage.assign(ne, {});
  return s;
}

namespace {

void check_shape(const NetworkModel& model, const AdmmState& s) {
  const std::size_t nl = model.loads().size();
  const std::size_t ng = model.generators().size();
  const std::size_t ne = model.lines().size();
  const bool ok = s.x.load.size() == nl && s.x.gen.size() == ng && s.x.flow.size() == ne &&
                  s.x.voltage.size() == ne && s.x.line_polar.size() == ne &&
                  s.z.load.size() == nl && s.z.gen.size() == ng && s.z.flow.size() == ne &&
                  s.z.voltage.size() == model.buses().size() && s.duals.load.size() == nl &&
                  s.duals.gen.size() == ng && s.duals.flow.size() == ne &&
                  s.duals.voltage.size() == ne;
  if (!ok) throw ConfigError("ADMM state does not match the network dimensions");
}

double dispatch_total(const NetworkModel& model, const std::vector<Complex>& gen) {
  double total = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) total += model.generators()[i].cost(gen[i].real());
  return total;
}

std::size_t end_bus(const Line& line, int end) { return end == 0 ? line.from : line.to; }

class Coordinator {
 public:
  Coordinator(const NetworkModel& model, const ObfuscatedLoads& noisy, const AdmmConfig& cfg)
      : model_(model), noisy_(noisy), cfg_(cfg), pool_(thread_count(cfg.threads)) {}

  AdmmResult run(AdmmState state) {
    AdmmResult result;
    Residuals res;
    bool have_residuals = false;
    while (state.iteration < cfg_.t_max) {
      const int iter = state.iteration + 1;
      const double rho = state.rho;
      solve_agents(state, rho);
      const BusVars previous = state.z;
      solve_buses(state, rho);
      res = compute_residuals(model_, state, previous, rho);
      have_residuals = true;
      state.duals = update_duals(model_, state, rho);
      state.iteration = iter;
      result.trace.push_back({iter, res.eps_p, res.eps_d, rho, dispatch_total(model_, state.x.gen),
                              boosting_active(iter, res.eps_p, cfg_)});
      if (cfg_.early_stop && res.eps_p <= cfg_.primal_target && res.eps_d <= cfg_.primal_target) {
        break;
      }
      if (iter % cfg_.adjust_every == 0) {
        state.rho = update_rho(rho, res.eps_p, res.eps_d, iter, cfg_);
      }
    }
    result.converged = have_residuals && res.eps_p <= cfg_.primal_target;
    result.iterations_used = static_cast<int>(result.trace.size());
    result.hat_loads = state.x.load;
    result.state = std::move(state);
    return result;
  }

 private:
  static unsigned thread_count(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
  }

  void solve_agents(AdmmState& s, double rho) {
    const std::size_t nl = s.x.load.size();
    const std::size_t ng = s.x.gen.size();
    const std::size_t ne = s.x.flow.size();
    pool_.parallel_for(nl + ng + ne, [&](std::size_t k) {
      if (k < nl) {
        s.x.load[k] = solve_load_agent(rho, s.duals.load[k], noisy_.values[k], s.z.load[k]);
      } else if (k < nl + ng) {
        const std::size_t g = k - nl;
        s.x.gen[g] = solve_generator_agent(rho, s.duals.gen[g], s.z.gen[g],
                                           model_.generators()[g], cfg_.beta, g);
      } else {
        solve_line(s, k - nl - ng, rho);
      }
    });
  }

  void solve_line(AdmmState& s, std::size_t l, double rho) {
    const Line& line = model_.lines()[l];
    std::array<LineEndCoupling, 2> ends;
    for (int e = 0; e < 2; ++e) {
      ends[e] = {s.duals.flow[l][e], s.duals.voltage[l][e], s.z.flow[l][e],
                 s.z.voltage[end_bus(line, e)]};
    }
    const LineProblem problem = LineProblem::from_model(model_, l, rho, ends);
    LineSolution sol;
    try {
      sol = solve_line_agent(problem, s.x.line_polar[l], cfg_.line, l);
    } catch (const LineSolveFailed&) {
      sol = solve_line_agent(problem, PolarVoltages{}, cfg_.line, l);
    }
    s.x.flow[l] = sol.flow;
    s.x.voltage[l] = sol.voltage;
    s.x.line_polar[l] = sol.polar;
  }

  void solve_buses(AdmmState& s, double rho) {
    pool_.parallel_for(model_.buses().size(), [&](std::size_t b) {
      std::vector<PowerCoupling> powers;
      std::vector<VoltageCoupling> voltages;
      for (std::size_t g : model_.generators_at(b)) {
        powers.push_back({Attachment::Generator, -s.duals.gen[g], s.x.gen[g]});
      }
      for (std::size_t d : model_.loads_at(b)) {
        powers.push_back({Attachment::Load, -s.duals.load[d], s.x.load[d]});
      }
      for (const LineEnd& le : model_.adjacency(b)) {
        powers.push_back({Attachment::Flow, -s.duals.flow[le.line][le.end],
                          s.x.flow[le.line][le.end]});
        voltages.push_back({-s.duals.voltage[le.line][le.end], s.x.voltage[le.line][le.end]});
      }
      if (powers.empty()) return;
      const BusResponse r = solve_bus_agent(rho, powers, voltages);
      std::size_t k = 0;
      for (std::size_t g : model_.generators_at(b)) s.z.gen[g] = r.powers[k++];
      for (std::size_t d : model_.loads_at(b)) s.z.load[d] = r.powers[k++];
      for (const LineEnd& le : model_.adjacency(b)) s.z.flow[le.line][le.end] = r.powers[k++];
      if (r.voltage) s.z.voltage[b] = *r.voltage;
    });
  }

  const NetworkModel& model_;
  const ObfuscatedLoads& noisy_;
  const AdmmConfig& cfg_;
  detail::ThreadPool pool_;
};

}  // namespace

AdmmResult run_admm(const NetworkModel& model, const ObfuscatedLoads& noisy,
                    const AdmmConfig& cfg) {
  return run_admm(model, noisy, cfg, initial_state(model, cfg));
}

AdmmResult run_admm(const NetworkModel& model, const ObfuscatedLoads& noisy,
                    const AdmmConfig& cfg, AdmmState start) {
  cfg.validate();
  if (!model.has_reference_costs()) {
    throw ConfigError("reference costs must be loaded before the fidelity phase");
  }
  if (noisy.values.size() != model.loads().size()) {
    throw ConfigError("obfuscated load count does not match the network");
  }
  check_shape(model, start);
  if (!(start.rho >= cfg.rho_min && start.rho <= cfg.rho_max)) start.rho = cfg.rho_init;
  Coordinator coordinator(model, noisy, cfg);
  return coordinator.run(std::move(start));
}

DualVars update_duals(const NetworkModel& model, const AdmmState& s, double rho) {
  DualVars d = s.duals;
  for (std::size_t k = 0; k < d.load.size(); ++k) d.load[k] += rho * (s.x.load[k] - s.z.load[k]);
  for (std::size_t k = 0; k < d.gen.size(); ++k) d.gen[k] += rho * (s.x.gen[k] - s.z.gen[k]);
  for (std::size_t l = 0; l < d.flow.size(); ++l) {
    const Line& line = model.lines()[l];
    for (int e = 0; e < 2; ++e) {
      d.flow[l][e] += rho * (s.x.flow[l][e] - s.z.flow[l][e]);
      d.voltage[l][e] += rho * (s.x.voltage[l][e] - s.z.voltage[end_bus(line, e)]);
    }
  }
  return d;
}

Residuals compute_residuals(const NetworkModel& model, const AdmmState& now,
                            const BusVars& previous, double rho) {
  double p = 0.0;
  double d = 0.0;
  for (std::size_t k = 0; k < now.x.load.size(); ++k) {
    p = std::max(p, linf(now.x.load[k] - now.z.load[k]));
    d = std::max(d, linf(now.z.load[k] - previous.load[k]));
  }
  for (std::size_t k = 0; k < now.x.gen.size(); ++k) {
    p = std::max(p, linf(now.x.gen[k] - now.z.gen[k]));
    d = std::max(d, linf(now.z.gen[k] - previous.gen[k]));
  }
  for (std::size_t l = 0; l < now.x.flow.size(); ++l) {
    const Line& line = model.lines()[l];
    for (int e = 0; e < 2; ++e) {
      p = std::max(p, linf(now.x.flow[l][e] - now.z.flow[l][e]));
      p = std::max(p, linf(now.x.voltage[l][e] - now.z.voltage[end_bus(line, e)]));
      d = std::max(d, linf(now.z.flow[l][e] - previous.flow[l][e]));
    }
  }
  for (std::size_t b = 0; b < now.z.voltage.size(); ++b) {
    d = std::max(d, linf(now.z.voltage[b] - previous.voltage[b]));
  }
  return {p, rho * d};
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

using nlohmann::json;

constexpr const char* kStateFormat = "pdopf-admm-state";
constexpr int kStateVersion = 1;

json to_json_c(Complex z) { return json::array({z.real(), z.imag()}); }

Complex from_json_c(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json to_json_v(const std::vector<Complex>& v) {
  json out = json::array();
  for (Complex z : v) out.push_back(to_json_c(z));
  return out;
}

json to_json_v2(const std::vector<std::array<Complex, 2>>& v) {
  json out = json::array();
  for (const auto& a : v) out.push_back(json::array({to_json_c(a[0]), to_json_c(a[1])}));
  return out;
}

std::vector<Complex> from_json_v(const json& j) {
  std::vector<Complex> out;
  for (const json& e : j) out.push_back(from_json_c(e));
  return out;
}

std::vector<std::array<Complex, 2>> from_json_v2(const json& j) {
  std::vector<std::array<Complex, 2>> out;
  for (const json& e : j) out.push_back({from_json_c(e.at(0)), from_json_c(e.at(1))});
  return out;
}

}  // namespace

std::string state_to_json(const AdmmState& s) {
  json polar = json::array();
  for (const PolarVoltages& p : s.x.line_polar) {
    polar.push_back(json::array({p.vm_from, p.va_from, p.vm_to, p.va_to}));
  }
  const json j = {
      {"format", kStateFormat},
      {"version", kStateVersion},
      {"iteration", s.iteration},
      {"rho", s.rho},
      {"consensus",
       {{"load", to_json_v(s.x.load)},
        {"gen", to_json_v(s.x.gen)},
        {"flow", to_json_v2(s.x.flow)},
        {"voltage", to_json_v2(s.x.voltage)},
        {"line_polar", polar}}},
      {"bus",
       {{"load", to_json_v(s.z.load)},
        {"gen", to_json_v(s.z.gen)},
        {"flow", to_json_v2(s.z.flow)},
        {"voltage", to_json_v(s.z.voltage)}}},
      {"duals",
       {{"load", to_json_v(s.duals.load)},
        {"gen", to_json_v(s.duals.gen)},
        {"flow", to_json_v2(s.duals.flow)},
        {"voltage", to_json_v2(s.duals.voltage)}}},
  };
  return j.dump(1);
}

AdmmState state_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kStateFormat) {
      throw ConfigError("not an ADMM state snapshot");
    }
    if (j.at("version").get<int>() != kStateVersion) {
      throw ConfigError("unsupported snapshot version " + j.at("version").dump());
    }
    AdmmState s;
    s.iteration = j.at("iteration").get<int>();
    s.rho = j.at("rho").get<double>();
    const json& x = j.at("consensus");
    s.x.load = from_json_v(x.at("load"));
    s.x.gen = from_json_v(x.at("gen"));
    s.x.flow = from_json_v2(x.at("flow"));
    s.x.voltage = from_json_v2(x.at("voltage"));
    for (const json& p : x.at("line_polar")) {
      s.x.line_polar.push_back(PolarVoltages::from_array(
          {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(),
           p.at(3).get<double>()}));
    }
    const json& z = j.at("bus");
    s.z.load = from_json_v(z.at("load"));
    s.z.gen = from_json_v(z.at("gen"));
    s.z.flow = from_json_v2(z.at("flow"));
    s.z.voltage = from_json_v(z.at("voltage"));
    const json& d = j.at("duals");
    s.duals.load = from_json_v(d.at("load"));
    s.duals.gen = from_json_v(d.at("gen"));
    s.duals.flow = from_json_v2(d.at("flow"));
    s.duals.voltage = from_json_v2(d.at("voltage"));
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ADMM state snapshot: ") + e.what());
  }
}

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "iter,eps_p,eps_d,rho,total_cost,boosting\n";
  for (const TraceRecord& r : trace) {
    out << r.iter << ',' << format_double(r.eps_p) << ',' << format_double(r.eps_d) << ','
        << format_double(r.rho) << ',' << format_double(r.total_cost) << ','
        << (r.boosting ? 1 : 0) << '\n';
  }
}

ConvergenceTrace read_trace_csv(std::istream& in) {
  ConvergenceTrace trace;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty() || (row == 1 && line.rfind("iter", 0) == 0)) continue;
    const auto f = split_fields(line, ',');
    std::optional<double> v[5];
    if (f.size() == 6) {
      for (int k = 0; k < 5; ++k) v[k] = parse_double(f[k]);
    }
    if (f.size() != 6 || !v[0] || !v[1] || !v[2] || !v[3] || !v[4] ||
        (f[5] != "0" && f[5] != "1")) {
      throw ConfigError("malformed trace row " + std::to_string(row));
    }
    trace.push_back({static_cast<int>(*v[0]), *v[1], *v[2], *v[3], *v[4], f[5] == "1"});
  }
  return trace;
}

}  // namespace pdopf
