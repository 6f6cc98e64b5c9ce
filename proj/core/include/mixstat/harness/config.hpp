#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixstat/bounds.hpp"
#include "mixstat/hidim.hpp"
#include "mixstat/kernels.hpp"
#include "mixstat/mixing.hpp"
#include "mixstat/processes.hpp"

namespace mixstat::harness {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultBudget = 1e11;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Simulate, Tail, Scaling, BiasCurve, DecomposeCheck, MixingProfile, MgfCheck, Calibrate };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct TailSettings {
  std::vector<double> x_grid;
  std::vector<std::size_t> calibrate_lengths;
  std::vector<std::size_t> holdout_lengths;
  std::optional<double> theta;  // known exactly; skips the oracle
  std::size_t oracle_draws = 1'000'000;
  std::size_t small_length = 100;  // cells with T below this are flagged
};

struct ScalingSettings {
  std::vector<std::size_t> dimensions;
  CorrelationKind estimator = CorrelationKind::Kendall;
  std::size_t oracle_samples = 100'000;
};

struct MixingSettings {
  MixingKind kind = MixingKind::Beta;
  std::vector<int> lags;
  std::vector<Conditioning> conditioning;
  std::vector<int> gap_grid;
};

struct MgfSettings {
  std::vector<int> summands;
  std::size_t draws = 100'000;
  int eta_points = 50;
};

struct CalibrateSettings {
  std::vector<TailPoint> points;
  std::optional<std::filesystem::path> tail_result;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Tail;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // 0 = all hardware threads
  double budget = kDefaultBudget;
  std::filesystem::path output_dir = "out";

  std::optional<ProcessSpec> process;
  nlohmann::json process_json;
  std::optional<KernelSpec> kernel;
  std::vector<std::size_t> lengths;
  std::size_t replications = 0;
  BoundConstants constants;

  TailSettings tail;
  ScalingSettings scaling;
  MixingSettings mixing;
  MgfSettings mgf;
  CalibrateSettings calibrate;

  nlohmann::json raw;  // input document with overrides applied
};

// Throws ConfigError on schema violations, including unknown fields.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

ProcessSpec process_from_json(const nlohmann::json& j);
// Gaussian copula or iid family at dimension p, for scaling experiments.
ProcessSpec process_at_dimension(const nlohmann::json& j, std::size_t p);

// Kernel evaluations the experiment is expected to perform.
double estimated_evaluations(const ExperimentConfig& config);
// Throws BudgetExceeded.
void check_budget(const ExperimentConfig& config);

}  // namespace mixstat::harness
