#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mixstat/rng.hpp"

namespace mixstat {

// Row-stochastic transition matrix P with stationary distribution pi.
class FiniteMarkovChain {
 public:
  // Solves for pi; throws if P is not stochastic or pi is not unique.
  explicit FiniteMarkovChain(Eigen::MatrixXd transition);
  // Uses the supplied pi after checking pi P = pi.
  FiniteMarkovChain(Eigen::MatrixXd transition, Eigen::VectorXd stationary);

  // P(0 -> 1) = p, P(1 -> 0) = q.
  static FiniteMarkovChain two_state(double p, double q);
  static FiniteMarkovChain symmetric_flip(double flip) { return two_state(flip, flip); }
  // Every row equal to pi: an iid sequence.
  static FiniteMarkovChain iid(const Eigen::VectorXd& pi);
  // Rows drawn from a flat Dirichlet; all entries positive.
  static FiniteMarkovChain random(int states, CounterRng& rng);

  int state_count() const noexcept { return static_cast<int>(transition_.rows()); }
  const Eigen::MatrixXd& transition() const noexcept { return transition_; }
  const Eigen::VectorXd& stationary() const noexcept { return stationary_; }
  double transition(int from, int to) const { return transition_(from, to); }

  // P^n, memoized. Safe to call concurrently.
  const Eigen::MatrixXd& power(int n) const;

  // Optional real vector attached to each state.
  const std::optional<std::vector<std::vector<double>>>& state_values() const noexcept { return state_values_; }
  void set_state_values(std::vector<std::vector<double>> values);

 private:
  struct PowerCache {
    std::mutex mutex;
    std::deque<Eigen::MatrixXd> powers;
  };

  void validate() const;

  Eigen::MatrixXd transition_;
  Eigen::VectorXd stationary_;
  std::optional<std::vector<std::vector<double>>> state_values_;
  std::shared_ptr<PowerCache> cache_ = std::make_shared<PowerCache>();
};

}  // namespace mixstat
