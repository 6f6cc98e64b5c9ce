#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mixstat/markov_chain.hpp"

namespace mixstat {

enum class MixingKind { Alpha, Beta, Phi, ConditionalPhi, ConditionalAlpha };

std::string_view to_string(MixingKind kind);
MixingKind mixing_kind_from_string(std::string_view name);

// Conditioning event X_time = state.
struct Conditioning {
  int time = 0;
  int state = 0;
};

struct MixingProfile {
  MixingKind kind = MixingKind::Beta;
  std::vector<int> lags;
  std::vector<double> values;
  std::optional<double> fitted_gamma;
  std::vector<Conditioning> conditioning;
  std::vector<int> gap_grid;  // conditional kinds: values are the max over this grid
};

// Half the L1 distance.
double total_variation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

// (1/2) sum_i pi_i sum_j |P^n(i,j) - pi_j|
double beta_coeff(const FiniteMarkovChain& chain, int n);
// max over states with pi_i > 0 of TV(P^n(i,.), pi)
double phi_coeff(const FiniteMarkovChain& chain, int n);
// Exact sup over subset pairs of |P(X_0 in A, X_n in B) - pi(A) pi(B)|; s <= 16.
double alpha_coeff(const FiniteMarkovChain& chain, int n);

inline constexpr int kMaxAlphaStates = 16;

// Phi coefficient of the law P(. | X_{t_1} = s_1, ..., X_{t_J} = s_J) between
// the block X_{t_J+1..t_J+j} and the block of `horizon` coordinates starting at
// X_{t_J+j+n}, by enumeration of the joint distribution of both blocks.
// The value does not depend on the horizon, since the future block is Markov
// given its first coordinate; horizon = 0 selects 3.
double conditional_phi_coeff(const FiniteMarkovChain& chain, const std::vector<Conditioning>& conditioning, int gap,
                             int n, int horizon = 0);

// Alpha coefficient of the same conditional law. Uses the Markov reduction to
// the time pair (t_J + j, t_J + j + n).
double conditional_alpha_coeff(const FiniteMarkovChain& chain, const std::vector<Conditioning>& conditioning,
                               int gap, int n);

// Least-squares slope of -log(value) against lag. Needs >= 3 strictly
// positive values and a positive slope.
double fit_decay_rate(const MixingProfile& profile);

// Values at each lag; fitted_gamma is set when the non-zero values decay.
MixingProfile mixing_profile(const FiniteMarkovChain& chain, MixingKind kind, const std::vector<int>& lags);
// Conditional coefficients; each value is the max over `gap_grid`.
MixingProfile conditional_profile(const FiniteMarkovChain& chain, MixingKind kind,
                                  const std::vector<Conditioning>& conditioning, const std::vector<int>& gap_grid,
                                  const std::vector<int>& lags);

nlohmann::json to_json(const MixingProfile& profile);
void write_profile_csv(std::ostream& out, const MixingProfile& profile);

}  // namespace mixstat
