#include "mixstat/mixing.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace mixstat {
namespace {

constexpr std::size_t kMaxEnumeration = std::size_t{1} << 28;

void require_lag(int n) {
  if (n < 1) throw std::invalid_argument("lag must be >= 1");
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) {
    out *= base;
    if (out > kMaxEnumeration) throw std::invalid_argument("state space too large for enumeration");
  }
  return out;
}

// Probability of the conditioning event under the stationary chain.
double conditioning_probability(const FiniteMarkovChain& chain, const std::vector<Conditioning>& cond) {
  if (cond.empty()) throw std::invalid_argument("conditioning list must be non-empty");
  const int s = chain.state_count();
  for (std::size_t i = 0; i < cond.size(); ++i) {
    if (cond[i].state < 0 || cond[i].state >= s) throw std::invalid_argument("conditioning state out of range");
    if (i > 0 && cond[i].time <= cond[i - 1].time)
      throw std::invalid_argument("conditioning times must be strictly increasing");
  }
  double p = chain.stationary()(cond.front().state);
  for (std::size_t i = 1; i < cond.size(); ++i) {
    p *= chain.power(cond[i].time - cond[i - 1].time)(cond[i - 1].state, cond[i].state);
  }
  if (!(p > 0.0)) throw std::invalid_argument("conditioning event has zero probability");
  return p;
}

}  // namespace

std::string_view to_string(MixingKind kind) {
  switch (kind) {
    case MixingKind::Alpha: return "alpha";
    case MixingKind::Beta: return "beta";
    case MixingKind::Phi: return "phi";
    case MixingKind::ConditionalPhi: return "conditional_phi";
    case MixingKind::ConditionalAlpha: return "conditional_alpha";
  }
  return "unknown";
}

MixingKind mixing_kind_from_string(std::string_view name) {
  if (name == "alpha") return MixingKind::Alpha;
  if (name == "beta") return MixingKind::Beta;
  if (name == "phi") return MixingKind::Phi;
  if (name == "conditional_phi") return MixingKind::ConditionalPhi;
  if (name == "conditional_alpha") return MixingKind::ConditionalAlpha;
  throw std::invalid_argument("unknown mixing coefficient kind: " + std::string(name));
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("distribution size mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

double beta_coeff(const FiniteMarkovChain& chain, int n) {
  require_lag(n);
  const Eigen::MatrixXd& pn = chain.power(n);
  const Eigen::VectorXd& pi = chain.stationary();
  double total = 0.0;
  for (Eigen::Index i = 0; i < pn.rows(); ++i) {
    total += pi(i) * (pn.row(i).transpose() - pi).cwiseAbs().sum();
  }
  return 0.5 * total;
}

double phi_coeff(const FiniteMarkovChain& chain, int n) {
  require_lag(n);
  const Eigen::MatrixXd& pn = chain.power(n);
  const Eigen::VectorXd& pi = chain.stationary();
  double best = 0.0;
  for (Eigen::Index i = 0; i < pn.rows(); ++i) {
    if (pi(i) > 0.0) best = std::max(best, total_variation(pn.row(i).transpose(), pi));
  }
  return best;
}

double alpha_coeff(const FiniteMarkovChain& chain, int n) {
  require_lag(n);
  const int s = chain.state_count();
  if (s > kMaxAlphaStates) throw std::invalid_argument("state count too large for alpha enumeration");
  const Eigen::MatrixXd& pn = chain.power(n);
  const Eigen::VectorXd& pi = chain.stationary();
  // d(i, j) = P(X_0 = i, X_n = j) - pi_i pi_j
  Eigen::MatrixXd d(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) d(i, j) = pi(i) * (pn(i, j) - pi(j));
  // For a fixed past set A the column sums c_j add to zero, so the best future
  // set collects the positive columns and achieves (1/2) sum_j |c_j|.
  double best = 0.0;
  Eigen::VectorXd col(s);
  const std::uint32_t subsets = std::uint32_t{1} << s;
  for (std::uint32_t mask = 1; mask < subsets; ++mask) {
    col.setZero();
    for (int i = 0; i < s; ++i)
      if (mask & (std::uint32_t{1} << i)) col += d.row(i).transpose();
    best = std::max(best, 0.5 * col.cwiseAbs().sum());
  }
  return best;
}

double conditional_phi_coeff(const FiniteMarkovChain& chain, const std::vector<Conditioning>& conditioning, int gap,
                             int n, int horizon) {
  require_lag(n);
  if (gap < 1) throw std::invalid_argument("gap j must be >= 1");
  if (horizon == 0) horizon = 3;
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const int s = chain.state_count();
  const double p_cond = conditioning_probability(chain, conditioning);
  const int last = conditioning.back().state;
  const Eigen::MatrixXd& p = chain.transition();
  const Eigen::MatrixXd& pn = chain.power(n);

  const auto us = static_cast<std::size_t>(s);
  const std::size_t n_atoms = ipow(us, gap);
  const std::size_t n_future = ipow(us, horizon);
  if (n_atoms > kMaxEnumeration / n_future) throw std::invalid_argument("state space too large for enumeration");

  // Past block X_{t_J+1..t_J+j}: P(cond, a) and the last state of a.
  std::vector<double> atom_joint(n_atoms);
  std::vector<int> atom_last(n_atoms);
  for (std::size_t a = 0; a < n_atoms; ++a) {
    // Digits of a, most significant first, are the states a_1..a_j.
    double w = p_cond;
    int prev = last;
    std::size_t rest = a;
    std::size_t scale = n_atoms / us;
    for (int k = 0; k < gap; ++k) {
      const int st = static_cast<int>(rest / scale);
      rest %= scale;
      if (scale > 1) scale /= us;
      w *= p(prev, st);
      prev = st;
    }
    atom_joint[a] = w;
    atom_last[a] = prev;
  }

  // Future block F = (f_0, ..., f_{H-1}) starting at X_{t_J+j+n}: path weight
  // prod_k P(f_k, f_{k+1}) and first state f_0.
  std::vector<double> path_weight(n_future);
  std::vector<int> first_state(n_future);
  for (std::size_t f = 0; f < n_future; ++f) {
    double w = 1.0;
    std::size_t rest = f;
    std::size_t scale = n_future / us;
    int prev = -1;
    for (int k = 0; k < horizon; ++k) {
      const int st = static_cast<int>(rest / scale);
      rest %= scale;
      if (scale > 1) scale /= us;
      if (prev < 0) {
        first_state[f] = st;
      } else {
        w *= p(prev, st);
      }
      prev = st;
    }
    path_weight[f] = w;
  }

  // Joint P(cond, a, F) = atom_joint[a] * P^n(a_j, f_0) * path_weight[F]. The
  // conditional law of F given a depends on a only through a_j, so atoms are
  // pooled by their last state before the future block is enumerated.
  std::vector<double> last_weight(us, 0.0);
  for (std::size_t a = 0; a < n_atoms; ++a) last_weight[static_cast<std::size_t>(atom_last[a])] += atom_joint[a] / p_cond;

  std::vector<double> future_marginal(n_future, 0.0);  // P(F | cond)
  for (int x = 0; x < s; ++x) {
    const double wx = last_weight[static_cast<std::size_t>(x)];
    if (wx <= 0.0) continue;
    for (std::size_t f = 0; f < n_future; ++f) future_marginal[f] += wx * pn(x, first_state[f]) * path_weight[f];
  }

  double best = 0.0;
  for (int x = 0; x < s; ++x) {
    if (last_weight[static_cast<std::size_t>(x)] <= 0.0) continue;
    // P(F | cond, a) for any atom a ending in x.
    double l1 = 0.0;
    for (std::size_t f = 0; f < n_future; ++f) l1 += std::abs(pn(x, first_state[f]) * path_weight[f] - future_marginal[f]);
    best = std::max(best, 0.5 * l1);
  }
  return best;
}

double conditional_alpha_coeff(const FiniteMarkovChain& chain, const std::vector<Conditioning>& conditioning,
                               int gap, int n) {
  require_lag(n);
  if (gap < 1) throw std::invalid_argument("gap j must be >= 1");
  const int s = chain.state_count();
  if (s > kMaxAlphaStates) throw std::invalid_argument("state count too large for alpha enumeration");
  conditioning_probability(chain, conditioning);
  const int last = conditioning.back().state;
  const Eigen::MatrixXd& pj = chain.power(gap);
  const Eigen::MatrixXd& pn = chain.power(n);
  // Conditional joint law of (X_{t_J+j}, X_{t_J+j+n}).
  Eigen::MatrixXd joint(s, s);
  for (int x = 0; x < s; ++x)
    for (int y = 0; y < s; ++y) joint(x, y) = pj(last, x) * pn(x, y);
  const Eigen::VectorXd row_m = joint.rowwise().sum();
  const Eigen::VectorXd col_m = joint.colwise().sum().transpose();
  const Eigen::MatrixXd d = joint - row_m * col_m.transpose();
  double best = 0.0;
  Eigen::VectorXd col(s);
  const std::uint32_t subsets = std::uint32_t{1} << s;
  for (std::uint32_t mask = 1; mask < subsets; ++mask) {
    col.setZero();
    for (int i = 0; i < s; ++i)
      if (mask & (std::uint32_t{1} << i)) col += d.row(i).transpose();
    best = std::max(best, 0.5 * col.cwiseAbs().sum());
  }
  return best;
}

double fit_decay_rate(const MixingProfile& profile) {
  if (profile.lags.size() != profile.values.size()) throw std::invalid_argument("lags and values differ in length");
  if (profile.lags.size() < 3) throw std::invalid_argument("decay fit needs at least 3 lags");
  const auto n = static_cast<double>(profile.lags.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < profile.lags.size(); ++i) {
    if (!(profile.values[i] > 0.0)) throw std::invalid_argument("decay fit needs strictly positive values");
    sx += profile.lags[i];
    sy += -std::log(profile.values[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < profile.lags.size(); ++i) {
    const double dx = profile.lags[i] - mx;
    sxx += dx * dx;
    sxy += dx * (-std::log(profile.values[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("decay fit needs distinct lags");
  const double gamma = sxy / sxx;
  if (!(gamma > 1e-12)) throw std::domain_error("coefficients do not decay");
  return gamma;
}

MixingProfile mixing_profile(const FiniteMarkovChain& chain, MixingKind kind, const std::vector<int>& lags) {
  MixingProfile out;
  out.kind = kind;
  out.lags = lags;
  for (int n : lags) {
    switch (kind) {
      case MixingKind::Alpha: out.values.push_back(alpha_coeff(chain, n)); break;
      case MixingKind::Beta: out.values.push_back(beta_coeff(chain, n)); break;
      case MixingKind::Phi: out.values.push_back(phi_coeff(chain, n)); break;
      default: throw std::invalid_argument("use conditional_profile for conditional coefficients");
    }
  }
  MixingProfile nonzero{kind, {}, {}, std::nullopt, {}, {}};
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (out.values[i] > 0.0) {
      nonzero.lags.push_back(lags[i]);
      nonzero.values.push_back(out.values[i]);
    }
  }
  if (nonzero.lags.size() >= 3) {
    try {
      out.fitted_gamma = fit_decay_rate(nonzero);
    } catch (const std::exception&) {
      out.fitted_gamma.reset();
    }
  }
  return out;
}

MixingProfile conditional_profile(const FiniteMarkovChain& chain, MixingKind kind,
                                  const std::vector<Conditioning>& conditioning, const std::vector<int>& gap_grid,
                                  const std::vector<int>& lags) {
  if (kind != MixingKind::ConditionalPhi && kind != MixingKind::ConditionalAlpha)
    throw std::invalid_argument("conditional_profile needs a conditional kind");
  if (gap_grid.empty()) throw std::invalid_argument("gap grid must be non-empty");
  MixingProfile out;
  out.kind = kind;
  out.lags = lags;
  out.conditioning = conditioning;
  out.gap_grid = gap_grid;
  for (int n : lags) {
    double best = 0.0;
    for (int j : gap_grid) {
      const double v = kind == MixingKind::ConditionalPhi ? conditional_phi_coeff(chain, conditioning, j, n)
                                                          : conditional_alpha_coeff(chain, conditioning, j, n);
      best = std::max(best, v);
    }
    out.values.push_back(best);
  }
  MixingProfile nonzero{kind, {}, {}, std::nullopt, {}, {}};
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (out.values[i] > 0.0) {
      nonzero.lags.push_back(lags[i]);
      nonzero.values.push_back(out.values[i]);
    }
  }
  if (nonzero.lags.size() >= 3) {
    try {
      out.fitted_gamma = fit_decay_rate(nonzero);
    } catch (const std::exception&) {
      out.fitted_gamma.reset();
    }
  }
  return out;
}

nlohmann::json to_json(const MixingProfile& profile) {
  nlohmann::json j;
  j["kind"] = to_string(profile.kind);
  j["lags"] = profile.lags;
  j["values"] = profile.values;
  j["fitted_gamma"] = profile.fitted_gamma ? nlohmann::json(*profile.fitted_gamma) : nlohmann::json(nullptr);
  if (!profile.conditioning.empty()) {
    auto c = nlohmann::json::array();
    for (const auto& e : profile.conditioning) c.push_back({{"time", e.time}, {"state", e.state}});
    j["conditioning"] = std::move(c);
    j["gap_grid"] = profile.gap_grid;
  }
  return j;
}

void write_profile_csv(std::ostream& out, const MixingProfile& profile) {
  out << "lag,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < profile.lags.size(); ++i) out << profile.lags[i] << ',' << profile.values[i] << '\n';
}

}  // namespace mixstat
