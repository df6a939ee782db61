#pragma once

#include "cocyclelab/io.hpp"
#include "cocyclelab/transfer.hpp"

namespace cocyclelab {

struct ExperimentConfig {
  std::string pipeline;
  Json system;
  Json generator;
  Json params;  // pipeline-specific knobs
  std::uint64_t seed = 1;
};

// Strict parse: unknown keys anywhere are a config error.
ExperimentConfig parse_experiment_config(const Json& doc);

inline const char* kPipelineNames[] = {"spectrum",     "periodic-approx", "growth-bound",
                                       "uniform-time", "closing-demo",    "shadowing-sweep",
                                       "transfer",     "boundedness"};

struct RunResult {
  bool pass = false;
  Json report;
};

// Runs one experiment, writing <pipeline>.report.json plus CSV data into
// out_dir. Deterministic for a fixed config and seed, whatever the worker
// count.
RunResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int workers);

// Merges every *.report.json under dir into a single summary document.
Json report_summary(const std::string& dir);

}  // namespace cocyclelab
