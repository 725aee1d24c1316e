#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdopf/coordinator.hpp"
#include "pdopf/privacy.hpp"

namespace pdopf {

struct ExperimentConfig {
  std::filesystem::path case_path;
  std::filesystem::path reference_dispatch_path;
  double epsilon = 1.0;
  double alpha = 0.1;
  double beta = 0.1;
  Mechanism mechanism = Mechanism::PolarLaplace;
  std::uint64_t seed = 0;
  int num_instances = 50;
  AdmmConfig admm;  // admm.beta is overwritten by `beta`
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;  // concurrent instances, 0 = hardware concurrency

  void validate() const;
};

// Exit codes of run_experiment.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitAgentFailure = 2;

// Runs num_instances privacy + fidelity instances with seeds seed + k and
// writes trace_k.csv, loads_k.csv and summary.json into output_dir.
// Messages go to `log`. Original load values are never written.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// Means over instances of the before-boost and final residuals and of the
// wall time, plus the spread of the cost difference.
struct SummaryTable {
  std::size_t instances = 0;
  double primal = 0.0;
  double primal_final = 0.0;
  double dual = 0.0;
  double dual_final = 0.0;
  double time_min = 0.0;
  double percent_diff_min = 0.0;
  double percent_diff_median = 0.0;
  double percent_diff_mean = 0.0;
  double percent_diff_max = 0.0;
};

// Throws ConfigError when the document is malformed.
SummaryTable summarize(const std::string& summary_json);
void print_summary_table(std::ostream& out, const SummaryTable& table);
// Reads, summarizes and prints; returns kExitConfig on a missing or
// malformed file.
int print_summary(const std::filesystem::path& summary_path, std::ostream& out, std::ostream& log);

}  // namespace pdopf
