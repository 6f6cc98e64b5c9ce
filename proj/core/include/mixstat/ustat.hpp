#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixstat/kernels.hpp"
#include "mixstat/markov_chain.hpp"
#include "mixstat/processes.hpp"
#include "mixstat/rng.hpp"

namespace mixstat {

inline constexpr double kMaxUstatTerms = 1e8;

// C(n, k) as a double; 0 when k > n.
double binomial(std::int64_t n, std::int64_t k);

// Average of h over all C(T, r) increasing index tuples, enumerated in
// colexicographic order with a compensated sum. State paths with a
// BoundedCustom kernel are evaluated on the state indices. Throws length_error
// when C(T, r) exceeds max_terms.
double u_statistic(const SeriesPath& path, const KernelSpec& kernel, double max_terms = kMaxUstatTerms);

// Same value, using the O(T log T) routines where one exists for the kernel.
double u_statistic_fast(const SeriesPath& path, const KernelSpec& kernel);

// Kendall's tau of columns (0, 1): merge-sort discordance count without ties,
// exact pairwise count otherwise.
double kendall_tau(const SeriesPath& path);
double kendall_tau(std::span<const double> x, std::span<const double> y);
// Number of inversions (pairs i < j with v[j] < v[i]); v is left sorted.
std::int64_t count_inversions(std::vector<double>& v);
// Ranks 1..T of distinct values.
std::vector<double> rank_vector(std::span<const double> v);
// Pearson correlation of two rank vectors of 1..T.
double rank_correlation(std::span<const double> rx, std::span<const double> ry);
bool has_ties(std::span<const double> v);

// Pairwise reference implementation.
double kendall_tau_brute(std::span<const double> x, std::span<const double> y);

struct SpearmanResult {
  double rho = 0.0;   // Pearson correlation of the rank vectors
  double rho3 = 0.0;  // U-statistic with the SpearmanSym kernel
  double tau = 0.0;
};

// Requires T >= 3 and no ties in either column.
SpearmanResult spearman_rho(const SeriesPath& path);
SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y);
// rho3 in O(T log T); requires no ties.
double spearman_rho3(std::span<const double> x, std::span<const double> y);

// Average over permutations sigma of [T] of the mean of h over the floor(T/r)
// consecutive non-overlapping blocks of sigma(1..T). An empty list means all
// T! permutations (T <= 8).
double hoeffding_decoupling_average(const SeriesPath& path, const KernelSpec& kernel,
                                    const std::vector<std::vector<int>>& permutations = {});

// Dense table h(x_1, ..., x_r) over state tuples, row-major in (x_1, ..., x_r).
// Uses eval_states for BoundedCustom kernels and the chain's state_values
// (or the state index) otherwise.
std::vector<double> kernel_state_table(const FiniteMarkovChain& chain, const KernelSpec& kernel);

// sum over state r-tuples of pi_{x_1} ... pi_{x_r} h(x).
double theta_independent(const FiniteMarkovChain& chain, const KernelSpec& kernel);

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

// h evaluated at r independent draws from the one-time marginal.
MonteCarloEstimate theta_independent_mc(const ProcessSpec& spec, const KernelSpec& kernel, std::size_t draws,
                                        const StreamKey& key);

}  // namespace mixstat
