#pragma once

#include "piccolo/analysis.hpp"
#include "piccolo/config.hpp"

#include <string>
#include <vector>

namespace piccolo {

inline constexpr const char* kVersion = "0.1.0";

struct SeedOutcome {
  int seed_index = 0;
  RunResult run;
  RegretReport report;
  bool report_supported = false;
  bool audit_supported = false;
  BoundAudit audit;
  std::vector<double> m_hat_prefix;  // recomputed budget after each round
};

// Executes one resolved experiment for all its seeds (optionally in parallel,
// capped by PICCOLO_THREADS). Deterministic per (config, seed).
std::vector<SeedOutcome> execute(const ExperimentConfig& cfg);

// CLI verbs; return process exit status (0 ok, 2 config error, 3 numeric abort).
int run_experiment(const std::string& config_path, const std::string& out_dir);
int run_sweep(const std::string& config_path, const std::string& out_dir);
int run_audit(const std::string& trace_csv, const std::string& states_dir);
int run_render(const std::string& csv_path, const std::string& column,
               const std::string& svg_path);

// Serialization used by the audit verb.
void write_states_file(const std::string& path, const ExperimentConfig& cfg,
                       const SeedOutcome& outcome);
struct LoadedStates {
  int seed_index = 0;
  RunResult run;
  Vec comparator;
};
LoadedStates read_states_file(const std::string& path);

}  // namespace piccolo
