#include "mixstat/markov_chain.hpp"

#include <cmath>
#include <stdexcept>

namespace mixstat {
namespace {

constexpr double kRowTolerance = 1e-12;
constexpr double kStationaryTolerance = 1e-10;

Eigen::VectorXd solve_stationary(const Eigen::MatrixXd& p) {
  const Eigen::Index s = p.rows();
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(s, s);
  a.row(s - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s);
  b(s - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() < s) throw std::invalid_argument("stationary distribution is not unique; supply it explicitly");
  Eigen::VectorXd pi = lu.solve(b);
  for (Eigen::Index i = 0; i < s; ++i) {
    if (pi(i) < 0.0 && pi(i) > -1e-14) pi(i) = 0.0;
  }
  return pi;
}

}  // namespace

FiniteMarkovChain::FiniteMarkovChain(Eigen::MatrixXd transition) : transition_(std::move(transition)) {
  if (transition_.rows() < 2 || transition_.rows() != transition_.cols())
    throw std::invalid_argument("transition matrix must be square with at least 2 states");
  for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
    if (std::abs(transition_.row(i).sum() - 1.0) > kRowTolerance || transition_.row(i).minCoeff() < 0.0)
      throw std::invalid_argument("transition matrix is not row-stochastic");
  }
  stationary_ = solve_stationary(transition_);
  validate();
}

FiniteMarkovChain::FiniteMarkovChain(Eigen::MatrixXd transition, Eigen::VectorXd stationary)
    : transition_(std::move(transition)), stationary_(std::move(stationary)) {
  validate();
}

void FiniteMarkovChain::validate() const {
  const Eigen::Index s = transition_.rows();
  if (s < 2 || transition_.cols() != s) throw std::invalid_argument("transition matrix must be square with at least 2 states");
  if (stationary_.size() != s) throw std::invalid_argument("stationary vector has wrong length");
  for (Eigen::Index i = 0; i < s; ++i) {
    if (!transition_.row(i).allFinite()) throw std::invalid_argument("transition matrix has non-finite entries");
    if (std::abs(transition_.row(i).sum() - 1.0) > kRowTolerance || transition_.row(i).minCoeff() < 0.0)
      throw std::invalid_argument("transition matrix is not row-stochastic");
  }
  if (stationary_.minCoeff() < 0.0 || std::abs(stationary_.sum() - 1.0) > kStationaryTolerance)
    throw std::invalid_argument("stationary vector is not a probability vector");
  const Eigen::RowVectorXd moved = stationary_.transpose() * transition_;
  if ((moved - stationary_.transpose()).cwiseAbs().maxCoeff() > kStationaryTolerance)
    throw std::invalid_argument("supplied distribution is not stationary");
}

FiniteMarkovChain FiniteMarkovChain::two_state(double p, double q) {
  if (p < 0 || p > 1 || q < 0 || q > 1) throw std::invalid_argument("transition probabilities must lie in [0, 1]");
  Eigen::MatrixXd m(2, 2);
  m << 1 - p, p, q, 1 - q;
  if (p + q == 0) throw std::invalid_argument("two-state chain with p = q = 0 has no unique stationary law");
  Eigen::VectorXd pi(2);
  pi << q / (p + q), p / (p + q);
  return FiniteMarkovChain(m, pi);
}

FiniteMarkovChain FiniteMarkovChain::iid(const Eigen::VectorXd& pi) {
  Eigen::MatrixXd m(pi.size(), pi.size());
  for (Eigen::Index i = 0; i < pi.size(); ++i) m.row(i) = pi.transpose();
  return FiniteMarkovChain(m, pi);
}

FiniteMarkovChain FiniteMarkovChain::random(int states, CounterRng& rng) {
  if (states < 2) throw std::invalid_argument("random chain needs at least 2 states");
  Eigen::MatrixXd m(states, states);
  for (int i = 0; i < states; ++i) {
    double total = 0.0;
    for (int j = 0; j < states; ++j) {
      m(i, j) = -std::log(rng.uniform());
      total += m(i, j);
    }
    m.row(i) /= total;
    // Force the row sum to one to within rounding.
    m(i, states - 1) = 1.0 - (m.row(i).sum() - m(i, states - 1));
  }
  return FiniteMarkovChain(m);
}

const Eigen::MatrixXd& FiniteMarkovChain::power(int n) const {
  if (n < 0) throw std::invalid_argument("matrix power must be non-negative");
  std::lock_guard lock(cache_->mutex);
  auto& powers = cache_->powers;
  if (powers.empty()) powers.push_back(Eigen::MatrixXd::Identity(transition_.rows(), transition_.cols()));
  while (static_cast<int>(powers.size()) <= n) powers.push_back(powers.back() * transition_);
  return powers[static_cast<std::size_t>(n)];
}

void FiniteMarkovChain::set_state_values(std::vector<std::vector<double>> values) {
  if (values.size() != static_cast<std::size_t>(state_count()))
    throw std::invalid_argument("state_values needs one entry per state");
  for (const auto& v : values)
    if (v.empty() || v.size() != values.front().size())
      throw std::invalid_argument("state_values must share one non-zero dimension");
  state_values_ = std::move(values);
}

}  // namespace mixstat
