#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pdopf/errors.hpp"
#include "pdopf/experiment.hpp"
#include "pdopf/network.hpp"
#include "pdopf/privacy.hpp"

namespace {

int obfuscate_command(const std::string& case_path, const pdopf::PrivacyParams& params,
                      std::uint64_t seed, const std::string& out_path) {
  try {
    const pdopf::NetworkModel model = pdopf::read_case_file(case_path);
    const auto ranges = pdopf::default_load_ranges(model);
    const pdopf::ObfuscatedLoads noisy = pdopf::obfuscate_all(model, params, ranges, seed);
    if (out_path.empty() || out_path == "-") {
      pdopf::write_obfuscated_csv(std::cout, noisy);
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw pdopf::ConfigError("cannot write " + out_path);
      pdopf::write_obfuscated_csv(f, noisy);
    }
  } catch (const pdopf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pdopf::kExitConfig;
  }
  return pdopf::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving obfuscation of AC optimal power flow data"};
  app.require_subcommand(1);

  pdopf::ExperimentConfig cfg;
  std::string case_path, dispatch_path, out_dir = "out", mechanism = "laplace";
  bool no_early_stop = false;

  auto* run = app.add_subcommand("run", "Obfuscate loads and restore fidelity for many seeds");
  run->add_option("--case", case_path, "MATPOWER case file")->required();
  run->add_option("--ref-dispatch", dispatch_path,
                  "Reference dispatch CSV (gen_index,p_ref,q_ref, per unit)")
      ->required();
  run->add_option("--epsilon", cfg.epsilon, "Privacy loss")->capture_default_str();
  run->add_option("--alpha", cfg.alpha, "Indistinguishability distance (p.u.)")
      ->capture_default_str();
  run->add_option("--beta", cfg.beta, "Relative cost tolerance")->capture_default_str();
  run->add_option("--mechanism", mechanism, "laplace or piecewise")
      ->check(CLI::IsMember({"laplace", "piecewise"}))
      ->capture_default_str();
  run->add_option("--seed", cfg.seed, "Base seed; instance k uses seed + k")->capture_default_str();
  run->add_option("--num-instances,--instances", cfg.num_instances, "Number of instances")->capture_default_str();
  run->add_option("--t-max", cfg.admm.t_max, "ADMM iteration limit")->capture_default_str();
  run->add_option("--rho-init", cfg.admm.rho_init, "Initial penalty")->capture_default_str();
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--threads", cfg.threads, "Concurrent instances (0 = all cores)")
      ->capture_default_str();
  run->add_flag("--no-early-stop", no_early_stop, "Always run --t-max iterations");

  std::string summary_path;
  auto* summary = app.add_subcommand("summary", "Print the residual and runtime table");
  summary->add_option("summary", summary_path, "summary.json written by 'run'")->required();

  std::string ob_case, ob_out, ob_mechanism = "laplace";
  pdopf::PrivacyParams ob_params;
  std::uint64_t ob_seed = 0;
  auto* obf = app.add_subcommand("obfuscate", "Write obfuscated loads only");
  obf->add_option("--case", ob_case, "MATPOWER case file")->required();
  obf->add_option("--epsilon", ob_params.epsilon, "Privacy loss")->capture_default_str();
  obf->add_option("--alpha", ob_params.alpha, "Indistinguishability distance (p.u.)")
      ->capture_default_str();
  obf->add_option("--mechanism", ob_mechanism, "laplace or piecewise")
      ->check(CLI::IsMember({"laplace", "piecewise"}))
      ->capture_default_str();
  obf->add_option("--seed", ob_seed, "Seed")->capture_default_str();
  obf->add_option("--out", ob_out, "Output CSV (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? pdopf::kExitOk : pdopf::kExitConfig;
  }

  if (*run) {
    cfg.case_path = case_path;
    cfg.reference_dispatch_path = dispatch_path;
    cfg.output_dir = out_dir;
    cfg.mechanism = pdopf::mechanism_from_string(mechanism);
    cfg.admm.early_stop = !no_early_stop;
    return pdopf::run_experiment(cfg, std::cerr);
  }
  if (*summary) return pdopf::print_summary(summary_path, std::cout, std::cerr);
  ob_params.mechanism = pdopf::mechanism_from_string(ob_mechanism);
  return obfuscate_command(ob_case, ob_params, ob_seed, ob_out);
}
