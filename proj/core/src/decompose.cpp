#include "mixstat/decompose.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mixstat/ustat.hpp"

namespace mixstat {
namespace {

struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

double ipow(double base, int exp) {
  double out = 1.0;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// Calls fn(gaps) for every gap vector of length r - 1 with entries >= 1 and
// sum <= max_sum.
template <typename Fn>
void for_each_gap_vector(int r, int max_sum, Fn&& fn) {
  std::vector<int> gaps(static_cast<std::size_t>(std::max(r - 1, 0)), 1);
  if (r <= 1) {
    fn(std::span<const int>{});
    return;
  }
  if (r - 1 > max_sum) return;
  for (;;) {
    fn(std::span<const int>(gaps));
    // Odometer with the sum constraint.
    int total = 0;
    for (int g : gaps) total += g;
    std::size_t i = 0;
    for (; i < gaps.size(); ++i) {
      if (total < max_sum) {
        ++gaps[i];
        break;
      }
      total -= gaps[i] - 1;
      gaps[i] = 1;
    }
    if (i == gaps.size()) return;
  }
}

}  // namespace

ConditionalExpectationOracle::ConditionalExpectationOracle(FiniteMarkovChain chain, const KernelSpec& kernel,
                                                           int max_gap)
    : chain_(std::move(chain)), order_(kernel.order()), states_(chain_.state_count()), max_gap_(max_gap),
      bound_(kernel.bound()) {
  if (max_gap_ < 1) max_gap_ = 1;
  const int r = order_;
  const auto s = static_cast<std::size_t>(states_);
  const auto G = static_cast<std::size_t>(max_gap_);
  double work = 0.0;
  for (int m = 0; m < r; ++m) work += ipow(static_cast<double>(s), m + 1) * ipow(static_cast<double>(G), r - 1 - m);
  if (work > 1e9) throw std::length_error("conditional expectation tables too large");

  levels_.resize(static_cast<std::size_t>(r + 1));
  levels_[static_cast<std::size_t>(r)] = kernel_state_table(chain_, kernel);
  // levels_[m][xs * G^(r-m) + gi], where gi encodes (g_m, ..., g_{r-1}) with g_m most significant.
  for (int m = r - 1; m >= 1; --m) {
    const auto n_states = static_cast<std::size_t>(ipow(static_cast<double>(s), m));
    const auto n_gaps = static_cast<std::size_t>(ipow(static_cast<double>(G), r - m));
    const std::size_t child_gaps = n_gaps / G;
    const auto& child = levels_[static_cast<std::size_t>(m + 1)];
    auto& level = levels_[static_cast<std::size_t>(m)];
    level.assign(n_states * n_gaps, 0.0);
    for (std::size_t g = 1; g <= G; ++g) {
      const Eigen::MatrixXd& pg = chain_.power(static_cast<int>(g));
      for (std::size_t xs = 0; xs < n_states; ++xs) {
        const auto last = static_cast<Eigen::Index>(xs % s);
        for (std::size_t rest = 0; rest < child_gaps; ++rest) {
          double v = 0.0;
          for (std::size_t y = 0; y < s; ++y)
            v += pg(last, static_cast<Eigen::Index>(y)) * child[(xs * s + y) * child_gaps + rest];
          level[xs * n_gaps + (g - 1) * child_gaps + rest] = v;
        }
      }
    }
  }
  const auto n_gaps0 = static_cast<std::size_t>(ipow(static_cast<double>(G), r - 1));
  auto& top = levels_[0];
  top.assign(n_gaps0, 0.0);
  const auto& first = levels_[1];
  const Eigen::VectorXd& pi = chain_.stationary();
  for (std::size_t gi = 0; gi < n_gaps0; ++gi) {
    double v = 0.0;
    for (std::size_t x = 0; x < s; ++x) v += pi(static_cast<Eigen::Index>(x)) * first[x * n_gaps0 + gi];
    top[gi] = v;
  }
}

std::size_t ConditionalExpectationOracle::gap_index(std::span<const int> gaps) const {
  std::size_t gi = 0;
  for (int g : gaps) {
    if (g < 1 || g > max_gap_) throw std::out_of_range("gap outside tabulated range");
    gi = gi * static_cast<std::size_t>(max_gap_) + static_cast<std::size_t>(g - 1);
  }
  return gi;
}

double ConditionalExpectationOracle::theta_hat(std::span<const int> states, std::span<const int> gaps) const {
  const auto m = static_cast<int>(states.size());
  if (m < 1 || m > order_) throw std::invalid_argument("conditioning length out of range");
  if (static_cast<int>(gaps.size()) != order_ - m) throw std::invalid_argument("wrong number of gaps");
  std::size_t xs = 0;
  for (int x : states) {
    if (x < 0 || x >= states_) throw std::out_of_range("state out of range");
    xs = xs * static_cast<std::size_t>(states_) + static_cast<std::size_t>(x);
  }
  const auto n_gaps = static_cast<std::size_t>(ipow(max_gap_, order_ - m));
  return levels_[static_cast<std::size_t>(m)][xs * n_gaps + gap_index(gaps)];
}

double ConditionalExpectationOracle::theta(std::span<const int> gaps) const {
  if (static_cast<int>(gaps.size()) != order_ - 1) throw std::invalid_argument("wrong number of gaps");
  return levels_[0][gap_index(gaps)];
}

double theta_star(const FiniteMarkovChain& chain, const KernelSpec& kernel, int length) {
  if (length < kernel.order()) throw std::invalid_argument("T smaller than kernel order");
  ConditionalExpectationOracle oracle(chain, kernel, length - 1);
  return theta_star(oracle, length);
}

double theta_star(const ConditionalExpectationOracle& oracle, int length) {
  const int r = oracle.order();
  if (length < r) throw std::invalid_argument("T smaller than kernel order");
  if (length - 1 > oracle.max_gap() && r > 1) throw std::invalid_argument("oracle gap range too small for T");
  KahanSum acc;
  for_each_gap_vector(r, length - 1, [&](std::span<const int> gaps) {
    int total = 0;
    for (int g : gaps) total += g;
    // Number of start times t_1 with t_1 + sum(g) <= T.
    acc.add(static_cast<double>(length - total) * oracle.theta(gaps));
  });
  return acc.sum / binomial(length, r);
}

double DecompositionReport::b_term(int k, std::span<const int> prefix) const {
  if (k < 1 || k > order) throw std::out_of_range("k out of range");
  if (b_terms.empty()) throw std::logic_error("B-terms were not kept");
  if (static_cast<int>(prefix.size()) != order - k + 1) throw std::invalid_argument("prefix has wrong length");
  std::size_t idx = 0;
  for (int t : prefix) idx = idx * static_cast<std::size_t>(length) + static_cast<std::size_t>(t);
  return b_terms[static_cast<std::size_t>(k - 1)][idx];
}

DecompositionReport decompose(const SeriesPath& path, const FiniteMarkovChain& chain, const KernelSpec& kernel,
                              const DecomposeOptions& options) {
  const int r = kernel.order();
  const auto T = static_cast<int>(path.length);
  const int s = chain.state_count();
  if (!path.is_state_path()) throw std::invalid_argument("decompose needs a state path");
  if (T < r) throw std::invalid_argument("path shorter than kernel order");
  for (int x : path.states)
    if (x < 0 || x >= s) throw std::invalid_argument("path state outside chain alphabet");
  for (int t = 0; t + 1 < T; ++t)
    if (!(chain.transition(path.states[static_cast<std::size_t>(t)], path.states[static_cast<std::size_t>(t + 1)]) > 0.0))
      throw std::invalid_argument("path has a transition the chain cannot make");
  const double tuples = binomial(T, r);
  if (tuples * r * (s + 1) > options.max_work) throw std::length_error("decomposition too large to enumerate");
  double prefix_cells = 0.0;
  for (int k = 1; k <= r; ++k) prefix_cells += ipow(T, r - k + 1);
  if (prefix_cells > 1e8) throw std::length_error("decomposition too large to enumerate");

  ConditionalExpectationOracle oracle(chain, kernel, std::max(T - 1, 1));
  const Eigen::VectorXd& pi = chain.stationary();

  DecompositionReport report;
  report.order = r;
  report.length = T;
  report.bound = kernel.bound();

  std::vector<KahanSum> a_sums(static_cast<std::size_t>(r));
  KahanSum u_sum;
  // b[k-1] and p1[k-1] are indexed by the length r-k+1 prefix.
  std::vector<std::vector<double>> b(static_cast<std::size_t>(r)), p1(static_cast<std::size_t>(r));
  for (int k = 1; k <= r; ++k) {
    const auto cells = static_cast<std::size_t>(ipow(T, r - k + 1));
    b[static_cast<std::size_t>(k - 1)].assign(cells, 0.0);
    p1[static_cast<std::size_t>(k - 1)].assign(cells, 0.0);
  }

  std::vector<int> t(static_cast<std::size_t>(r));
  std::vector<int> x(static_cast<std::size_t>(r));
  std::vector<int> g(static_cast<std::size_t>(std::max(r - 1, 0)));
  std::vector<int> probe(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) t[static_cast<std::size_t>(i)] = i;

  // hat(m) = theta_hat conditioned on the first m tuple states; hat(0) = E h.
  auto hat = [&](std::span<const int> states, int m) {
    const std::span<const int> gaps(g.data() + (m == 0 ? 0 : m - 1), g.size() - (m == 0 ? 0 : m - 1));
    if (m == 0) return oracle.theta(gaps);
    return oracle.theta_hat(states.first(static_cast<std::size_t>(m)), gaps);
  };

  for (;;) {
    for (int i = 0; i < r; ++i) x[static_cast<std::size_t>(i)] = path.states[static_cast<std::size_t>(t[static_cast<std::size_t>(i)])];
    for (int i = 0; i + 1 < r; ++i)
      g[static_cast<std::size_t>(i)] = t[static_cast<std::size_t>(i + 1)] - t[static_cast<std::size_t>(i)];
    u_sum.add(hat(x, r));

    for (int k = 1; k <= r; ++k) {
      const int p = r - k + 1;  // states conditioned on in the leading term
      const double scale = 1.0 / ipow(T, k - 1);
      const double base = hat(x, p - 1);
      const double a = scale * (hat(x, p) - base);
      a_sums[static_cast<std::size_t>(k - 1)].add(a);

      std::size_t idx = 0;
      for (int i = 0; i < p; ++i) idx = idx * static_cast<std::size_t>(T) + static_cast<std::size_t>(t[static_cast<std::size_t>(i)]);
      b[static_cast<std::size_t>(k - 1)][idx] += a;

      // Same term averaged over the state at t_p given the earlier states.
      std::copy(x.begin(), x.end(), probe.begin());
      double mean = 0.0;
      for (int y = 0; y < s; ++y) {
        const double w = p == 1 ? pi(y)
                                : chain.power(g[static_cast<std::size_t>(p - 2)])(x[static_cast<std::size_t>(p - 2)], y);
        if (w == 0.0) continue;
        probe[static_cast<std::size_t>(p - 1)] = y;
        mean += w * scale * (hat(probe, p) - base);
      }
      p1[static_cast<std::size_t>(k - 1)][idx] += mean;
    }

    int i = 0;
    while (i < r) {
      const int limit = (i + 1 < r) ? t[static_cast<std::size_t>(i + 1)] : T;
      if (t[static_cast<std::size_t>(i)] + 1 < limit) break;
      ++i;
    }
    if (i == r) break;
    ++t[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j) t[static_cast<std::size_t>(j)] = j;
  }

  report.u_value = u_sum.sum / tuples;
  report.theta_star = theta_star(oracle, T);
  double s_total = 0.0;
  for (int k = 1; k <= r; ++k) {
    const double factor = ipow(T, k - 1) / tuples;
    const double sk = factor * a_sums[static_cast<std::size_t>(k - 1)].sum;
    report.s_terms.push_back(sk);
    s_total += sk;
    KahanSum regrouped;
    for (double v : b[static_cast<std::size_t>(k - 1)]) {
      regrouped.add(v);
      report.b_term_max_abs = std::max(report.b_term_max_abs, std::abs(v));
    }
    for (double v : p1[static_cast<std::size_t>(k - 1)]) report.p1_max_abs = std::max(report.p1_max_abs, std::abs(v));
    report.regroup_max_diff = std::max(report.regroup_max_diff, std::abs(sk - factor * regrouped.sum));
  }
  report.residual = report.u_value - report.theta_star - s_total;
  if (options.keep_b_terms) report.b_terms = std::move(b);
  return report;
}

nlohmann::json to_json(const DecompositionReport& report) {
  return nlohmann::json{{"order", report.order},
                        {"T", report.length},
                        {"bound", report.bound},
                        {"s_terms", report.s_terms},
                        {"u_value", report.u_value},
                        {"theta_star", report.theta_star},
                        {"residual", report.residual},
                        {"b_term_max_abs", report.b_term_max_abs},
                        {"p1_max_abs", report.p1_max_abs},
                        {"regroup_max_diff", report.regroup_max_diff}};
}

}  // namespace mixstat
