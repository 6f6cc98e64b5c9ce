#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixstat/harness/config.hpp"

namespace mixstat::harness {

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::Tail;
  nlohmann::json result;    // a pure function of the config
  nlohmann::json metadata;  // wall clock and worker count
  // Extra plot-ready files: (file name, contents).
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<std::string> failures;  // failed property checks

  bool ok() const noexcept { return failures.empty(); }
};

ExperimentResult run_simulate(const ExperimentConfig& config);
ExperimentResult run_tail_experiment(const ExperimentConfig& config);
ExperimentResult run_scaling(const ExperimentConfig& config);
ExperimentResult run_bias_curve(const ExperimentConfig& config);
ExperimentResult run_decompose_check(const ExperimentConfig& config);
ExperimentResult run_mixing_profile(const ExperimentConfig& config);
ExperimentResult run_mgf_check(const ExperimentConfig& config);
ExperimentResult run_calibrate(const ExperimentConfig& config);

// Checks the budget, dispatches on config.kind and fills the metadata block.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes config.json, result.json and the extra files, overwriting.
// Throws std::runtime_error naming the path on I/O failure.
void emit_outputs(const ExperimentConfig& config, const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace mixstat::harness
