#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mixstat/processes.hpp"
#include "mixstat/rng.hpp"

namespace mixstat {

enum class CorrelationKind { Kendall, Spearman };

std::string_view to_string(CorrelationKind kind);
CorrelationKind correlation_kind_from_string(std::string_view name);

struct CorrelationMatrixEstimate {
  CorrelationKind kind = CorrelationKind::Kendall;
  std::size_t dimension = 0;
  std::size_t length = 0;
  Eigen::MatrixXd matrix;
};

struct PopulationMatrix {
  CorrelationKind kind = CorrelationKind::Kendall;
  std::size_t dimension = 0;
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd std_error;  // per entry, from batch means
  std::string provenance;
  std::size_t samples = 0;
};

// Entry (j, k) is kendall_tau / spearman_rho of columns (j, k); unit diagonal.
// Requires T >= 3, p >= 2 and no constant column; spearman also rejects ties.
CorrelationMatrixEstimate kendall_matrix(const SeriesPath& data, std::size_t threads = 1);
CorrelationMatrixEstimate spearman_matrix(const SeriesPath& data, std::size_t threads = 1);
CorrelationMatrixEstimate correlation_matrix(const SeriesPath& data, CorrelationKind kind, std::size_t threads = 1);

inline constexpr std::size_t kMinOracleSamples = 10000;

// Applies the estimator to `samples` iid draws from the stationary marginal,
// split into `batches` equal batches; value and standard error come from the
// batch estimates.
PopulationMatrix population_matrix_oracle(const ProcessSpec& spec, CorrelationKind kind, std::size_t samples,
                                          const StreamKey& key, std::size_t batches = 20, std::size_t threads = 1);

// Largest off-diagonal |estimate - population|.
double max_norm_deviation(const CorrelationMatrixEstimate& estimate, const PopulationMatrix& population);

// sqrt(log(T p) / T)
double corollary_rate(double T, double p);

struct ScalingCell {
  std::size_t length = 0;
  std::size_t dimension = 0;
  std::vector<double> deviations;  // replication order
  double q10 = 0, q25 = 0, median = 0, q75 = 0, q90 = 0;
  double rate = 0.0;
  double ratio_to_rate = 0.0;  // median / rate
};

struct ScalingSlope {
  std::size_t dimension = 0;
  bool defined = false;  // needs >= 2 distinct T
  double slope = 0.0;    // log median deviation against log T
};

struct ScalingReport {
  CorrelationKind kind = CorrelationKind::Kendall;
  std::size_t replications = 0;
  std::vector<ScalingCell> cells;  // p major, then T
  std::vector<ScalingSlope> slopes;
  double ratio_spread = 0.0;  // max / min ratio_to_rate over cells
  std::vector<PopulationMatrix> populations;
};

struct ScalingSpec {
  std::function<ProcessSpec(std::size_t p)> family;
  CorrelationKind kind = CorrelationKind::Kendall;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> dimensions;
  std::size_t replications = 50;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t oracle_samples = 100000;
};

// Replication i of cell c uses stream (seed, i, c); the population oracle for
// the d-th dimension uses (seed, 0, 1'000'000 + d).
ScalingReport scaling_experiment(const ScalingSpec& spec);

// Linear-interpolated sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

nlohmann::json to_json(const CorrelationMatrixEstimate& m);
nlohmann::json to_json(const PopulationMatrix& m);
nlohmann::json to_json(const ScalingReport& r);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
// Columns T,p,median_dev,ratio_to_rate.
void write_scaling_csv(std::ostream& out, const ScalingReport& r);

}  // namespace mixstat
