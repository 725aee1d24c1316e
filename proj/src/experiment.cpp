#include "pdopf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pdopf/errors.hpp"
#include "pdopf/text.hpp"
#include "pdopf/validation.hpp"
#include "thread_pool.hpp"

namespace pdopf {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
  if (num_instances < 1) throw ConfigError("number of instances must be at least 1");
  PrivacyParams{epsilon, alpha, mechanism}.validate();
  AdmmConfig a = admm;
  a.beta = beta;
  a.validate();
}

namespace {

struct InstanceOutcome {
  json record;
  std::string trace_csv;
  std::string loads_csv;
  bool failed = false;
  std::string error;
};

InstanceOutcome run_instance(const NetworkModel& model, const ExperimentConfig& cfg,
                             const AdmmConfig& admm, int k) {
  InstanceOutcome out;
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
  json& rec = out.record;
  rec["instance"] = k;
  rec["seed"] = seed;

  const auto start = std::chrono::steady_clock::now();
  const PrivacyParams params{cfg.epsilon, cfg.alpha, cfg.mechanism};
  const auto ranges = default_load_ranges(model);
  const ObfuscatedLoads noisy = obfuscate_all(model, params, ranges, seed);
  rec["noise_layout"] = std::string(noisy.noise_layout());

  AdmmResult result;
  try {
    result = run_admm(model, noisy, admm);
  } catch (const InfeasibleCostBand& e) {
    out.failed = true;
    out.error = e.what();
  } catch (const LineSolveFailed& e) {
    out.failed = true;
    out.error = e.what();
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  if (out.failed) {
    rec["status"] = "failed";
    rec["error"] = out.error;
    rec["wall_time_min"] = minutes;
    return out;
  }

  const ConvergenceTrace& trace = result.trace;
  const TraceRecord& last = trace.back();
  const int before = admm.boost_start() - 1;
  const TraceRecord& pre =
      (before >= 1 && before <= static_cast<int>(trace.size())) ? trace[before - 1] : last;

  const AdmmState& s = result.state;
  const FeasibilityReport feas =
      power_flow_residuals(model, s.z.voltage, s.z.gen, s.z.load, s.z.flow);
  const FidelityReport fid = fidelity_report(model, s.x.gen, admm.beta);

  rec["status"] = "ok";
  rec["converged"] = result.converged;
  rec["iterations"] = result.iterations_used;
  rec["eps_p_before_boost"] = pre.eps_p;
  rec["eps_d_before_boost"] = pre.eps_d;
  rec["eps_p_final"] = last.eps_p;
  rec["eps_d_final"] = last.eps_d;
  rec["rho_final"] = last.rho;
  rec["privacy_loss"] = privacy_loss(result.hat_loads, noisy.values);
  rec["total_cost"] = fid.total_cost;
  rec["reference_cost"] = fid.reference_total;
  rec["relative_gap"] = fid.relative_gap;
  rec["percent_diff"] = fid.percent_diff;
  rec["all_in_band"] = fid.all_in_band();
  rec["max_kcl_residual"] = feas.max_kcl_residual;
  rec["max_ohm_residual"] = feas.max_ohm_residual;
  rec["line_copy_ohm_residual"] = line_copy_ohm_residual(model, s.x.flow, s.x.voltage);
  rec["bound_violations"] = feas.bound_violations.size();
  rec["wall_time_min"] = minutes;

  std::ostringstream trace_csv;
  write_trace_csv(trace_csv, trace);
  out.trace_csv = trace_csv.str();

  std::ostringstream loads_csv;
  loads_csv << "load_index,p_tilde,q_tilde,p_hat,q_hat\n";
  for (std::size_t d = 0; d < noisy.values.size(); ++d) {
    loads_csv << d << ',' << format_double(noisy.values[d].real()) << ','
              << format_double(noisy.values[d].imag()) << ','
              << format_double(result.hat_loads[d].real()) << ','
              << format_double(result.hat_loads[d].imag()) << '\n';
  }
  out.loads_csv = loads_csv.str();
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  std::optional<NetworkModel> model;
  AdmmConfig admm = cfg.admm;
  admm.beta = cfg.beta;
  admm.threads = 1;
  try {
    cfg.validate();
    if (!fs::exists(cfg.case_path)) throw ConfigError("case file not found: " + cfg.case_path.string());
    if (!fs::exists(cfg.reference_dispatch_path)) {
      throw ConfigError("reference dispatch not found: " + cfg.reference_dispatch_path.string());
    }
    const NetworkModel raw = read_case_file(cfg.case_path);
    model.emplace(load_reference_costs(
        raw, read_reference_dispatch(cfg.reference_dispatch_path, raw.generators().size())));
    fs::create_directories(cfg.output_dir);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const unsigned threads =
      cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(cfg.num_instances));
  {
    detail::ThreadPool pool(std::min<unsigned>(threads, static_cast<unsigned>(cfg.num_instances)));
    try {
      pool.parallel_for(outcomes.size(), [&](std::size_t k) {
        outcomes[k] = run_instance(*model, cfg, admm, static_cast<int>(k));
      });
    } catch (const Error& e) {
      log << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  json records = json::array();
  bool any_failed = false;
  try {
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      const InstanceOutcome& o = outcomes[k];
      records.push_back(o.record);
      if (o.failed) {
        any_failed = true;
        log << "instance " << k << " failed: " << o.error << '\n';
        continue;
      }
      write_file(cfg.output_dir / ("trace_" + std::to_string(k) + ".csv"), o.trace_csv);
      write_file(cfg.output_dir / ("loads_" + std::to_string(k) + ".csv"), o.loads_csv);
    }
    const json summary = {
        {"format", "pdopf-summary"},
        {"version", 1},
        {"config",
         {{"case", cfg.case_path.filename().string()},
          {"epsilon", cfg.epsilon},
          {"alpha", cfg.alpha},
          {"beta", cfg.beta},
          {"mechanism", std::string(to_string(cfg.mechanism))},
          {"seed", cfg.seed},
          {"instances", cfg.num_instances},
          {"t_max", admm.t_max},
          {"rho_init", admm.rho_init},
          {"early_stop", admm.early_stop},
          {"boost_start", admm.boost_start()}}},
        {"records", records},
    };
    write_file(cfg.output_dir / "summary.json", summary.dump(1) + "\n");
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return any_failed ? kExitAgentFailure : kExitOk;
}

SummaryTable summarize(const std::string& summary_json) {
  SummaryTable t;
  try {
    const json doc = json::parse(summary_json);
    std::vector<double> diffs;
    for (const json& r : doc.at("records")) {
      if (r.at("status").get<std::string>() != "ok") continue;
      t.primal += r.at("eps_p_before_boost").get<double>();
      t.primal_final += r.at("eps_p_final").get<double>();
      t.dual += r.at("eps_d_before_boost").get<double>();
      t.dual_final += r.at("eps_d_final").get<double>();
      t.time_min += r.at("wall_time_min").get<double>();
      diffs.push_back(r.at("percent_diff").get<double>());
      ++t.instances;
    }
    if (t.instances == 0) throw ConfigError("summary has no successful records");
    const double n = static_cast<double>(t.instances);
    t.primal /= n;
    t.primal_final /= n;
    t.dual /= n;
    t.dual_final /= n;
    t.time_min /= n;
    std::sort(diffs.begin(), diffs.end());
    t.percent_diff_min = diffs.front();
    t.percent_diff_max = diffs.back();
    const std::size_t mid = diffs.size() / 2;
    t.percent_diff_median =
        diffs.size() % 2 == 1 ? diffs[mid] : 0.5 * (diffs[mid - 1] + diffs[mid]);
    double sum = 0.0;
    for (double d : diffs) sum += d;
    t.percent_diff_mean = sum / n;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed summary: ") + e.what());
  }
  return t;
}

void print_summary_table(std::ostream& out, const SummaryTable& t) {
  const auto flags = out.flags();
  out << "instances: " << t.instances << '\n';
  out << std::left << std::setw(12) << "Primal" << std::setw(12) << "Primal*" << std::setw(12)
      << "Dual" << std::setw(12) << "Dual*" << "Time(min)" << '\n';
  out << std::scientific << std::setprecision(3) << std::setw(12) << t.primal << std::setw(12)
      << t.primal_final << std::setw(12) << t.dual << std::setw(12) << t.dual_final << t.time_min
      << '\n';
  out << std::fixed << std::setprecision(4) << "cost difference (%): min " << t.percent_diff_min
      << "  median " << t.percent_diff_median << "  mean " << t.percent_diff_mean << "  max "
      << t.percent_diff_max << '\n';
  out.flags(flags);
}

int print_summary(const fs::path& summary_path, std::ostream& out, std::ostream& log) {
  std::ifstream f(summary_path, std::ios::binary);
  if (!f) {
    log << "error: cannot read " << summary_path.string() << '\n';
    return kExitConfig;
  }
  std::ostringstream text;
  text << f.rdbuf();
  try {
    print_summary_table(out, summarize(text.str()));
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace pdopf
