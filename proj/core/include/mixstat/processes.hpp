#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mixstat/markov_chain.hpp"
#include "mixstat/rng.hpp"

namespace mixstat {

// Independent standard normal vectors.
struct IidProcess {
  std::size_t dimension = 1;
};

// X_t = phi X_{t-1} + e_t per coordinate, e_t ~ N(0, 1), started from the
// exact stationary law N(0, 1 / (1 - phi^2)).
struct Ar1Process {
  double coefficient = 0.0;
  std::size_t dimension = 1;
};

// Moving sum of window + 1 consecutive iid N(0, 1) draws per coordinate.
struct MDependentProcess {
  int window = 0;
  std::size_t dimension = 1;
};

struct MarkovChainProcess {
  FiniteMarkovChain chain;
  std::optional<int> start_state;  // default: draw from pi
};

// Latent Z_t = a Z_{t-1} + sqrt(1 - a^2) L e_t with L L' = R, Z_0 ~ N(0, R);
// each coordinate is reported on the uniform scale Phi(Z_tj).
class GaussianCopulaProcess {
 public:
  GaussianCopulaProcess(Eigen::MatrixXd correlation, double temporal);

  static GaussianCopulaProcess equicorrelated(std::size_t dimension, double rho, double temporal);
  // R_jk = rho^|j - k|
  static GaussianCopulaProcess toeplitz(std::size_t dimension, double rho, double temporal);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(correlation_.rows()); }
  const Eigen::MatrixXd& correlation() const noexcept { return correlation_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  double temporal() const noexcept { return temporal_; }

 private:
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd factor_;
  double temporal_;
};

struct ProcessSpec {
  std::variant<IidProcess, Ar1Process, MDependentProcess, MarkovChainProcess, GaussianCopulaProcess> kind;
  std::uint64_t seed = 0;
};

std::string process_kind_name(const ProcessSpec& spec);
// Width of each observation (1 for chains without state_values).
std::size_t process_dimension(const ProcessSpec& spec);
void validate(const ProcessSpec& spec);

// A realized path: T rows of `dim` reals (row-major) and, for chains, the state
// index sequence.
struct SeriesPath {
  std::size_t length = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::vector<int> states;
  std::optional<ProcessSpec> provenance;
  std::optional<StreamKey> stream;

  bool is_state_path() const noexcept { return !states.empty(); }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * dim, dim}; }
  double at(std::size_t t, std::size_t c) const { return values[t * dim + c]; }
  std::vector<double> column(std::size_t c) const;
  // Path made of two columns (j, k).
  SeriesPath pair(std::size_t j, std::size_t k) const;

  static SeriesPath from_rows(const std::vector<std::vector<double>>& rows);
  static SeriesPath from_columns(const std::vector<std::vector<double>>& columns);
  static SeriesPath from_states(std::vector<int> states, int state_count);
};

// Deterministic in (spec, spec.seed, length): uses stream (seed, 0, 0).
SeriesPath generate(const ProcessSpec& spec, std::size_t length);
// Deterministic in (spec, key, length).
SeriesPath generate(const ProcessSpec& spec, std::size_t length, const StreamKey& key);
SeriesPath generate(const ProcessSpec& spec, std::size_t length, CounterRng& rng);

// One draw from the stationary one-time marginal (the law of a single X_t).
std::vector<double> sample_marginal(const ProcessSpec& spec, CounterRng& rng);

// Maps each value to the index of its cell; cell i is [cut_{i-1}, cut_i).
SeriesPath truncate_to_finite(const SeriesPath& path, std::span<const double> cuts);

using WindowAggregator = std::function<double(std::span<const double>)>;
// out[t] = aggregator(base[t..t+m]); length T - m.
SeriesPath m_dependent_from_iid(const SeriesPath& base, int window, const WindowAggregator& aggregator);

double standard_normal_cdf(double z);

}  // namespace mixstat
