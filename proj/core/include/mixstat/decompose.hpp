#pragma once

#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixstat/kernels.hpp"
#include "mixstat/markov_chain.hpp"
#include "mixstat/processes.hpp"

namespace mixstat {

// Exact conditional expectations of h(X_{t_1}, ..., X_{t_r}) for a stationary
// finite chain. By time homogeneity they depend on the tuple only through the
// gaps g_i = t_{i+1} - t_i, so every value is tabulated once at construction
// for gaps 1..max_gap and lookups are read-only afterwards.
class ConditionalExpectationOracle {
 public:
  ConditionalExpectationOracle(FiniteMarkovChain chain, const KernelSpec& kernel, int max_gap);

  int order() const noexcept { return order_; }
  int state_count() const noexcept { return states_; }
  int max_gap() const noexcept { return max_gap_; }
  double bound() const noexcept { return bound_; }
  const FiniteMarkovChain& chain() const noexcept { return chain_; }

  // E[h | X_{t_1} = x_1, ..., X_{t_m} = x_m] for m = states.size() in [1, r];
  // `gaps` holds g_m, ..., g_{r-1}. With m = r this is h itself.
  double theta_hat(std::span<const int> states, std::span<const int> gaps) const;
  // E[h] at gaps g_1, ..., g_{r-1}.
  double theta(std::span<const int> gaps) const;

 private:
  std::size_t gap_index(std::span<const int> gaps) const;

  FiniteMarkovChain chain_;
  int order_;
  int states_;
  int max_gap_;
  double bound_;
  // levels_[m] holds s^m * max_gap^(r-m) values, states major; levels_[0] is E[h].
  std::vector<std::vector<double>> levels_;
};

// Average of E h over all increasing r-tuples of [T].
double theta_star(const FiniteMarkovChain& chain, const KernelSpec& kernel, int length);
double theta_star(const ConditionalExpectationOracle& oracle, int length);

struct DecompositionReport {
  int order = 0;
  int length = 0;
  double bound = 0.0;
  std::vector<double> s_terms;  // S_1, ..., S_r
  double u_value = 0.0;
  double theta_star = 0.0;
  double residual = 0.0;  // u_value - theta_star - sum(s_terms)
  double b_term_max_abs = 0.0;
  // Largest |E[B | history]|, computed by summing over the next state.
  double p1_max_abs = 0.0;
  // Largest |S_k - S_k regrouped as a sum of B-terms|.
  double regroup_max_diff = 0.0;
  // Optional: b_terms[k-1][prefix] with the prefix (t_1, ..., t_{r-k+1}),
  // 0-based, flattened in base T (first time most significant).
  std::vector<std::vector<double>> b_terms;

  double b_term(int k, std::span<const int> prefix) const;
};

struct DecomposeOptions {
  bool keep_b_terms = false;
  double max_work = 5e8;
};

// Requires a state path whose transitions all have positive probability.
DecompositionReport decompose(const SeriesPath& path, const FiniteMarkovChain& chain, const KernelSpec& kernel,
                              const DecomposeOptions& options = {});

nlohmann::json to_json(const DecompositionReport& report);

}  // namespace mixstat
