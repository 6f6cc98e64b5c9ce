#include "mixstat/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

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

bool use_states(const SeriesPath& path, const KernelSpec& kernel) {
  return path.is_state_path() && kernel.kind() == KernelKind::BoundedCustom;
}

void check_point_dim(const SeriesPath& path, const KernelSpec& kernel) {
  if (use_states(path, kernel)) {
    for (int st : path.states)
      if (st < 0 || st >= kernel.state_count()) throw std::invalid_argument("path state outside kernel alphabet");
    return;
  }
  const std::size_t need = kernel.point_dimension();
  if (need != 0 && path.dim != need) throw std::invalid_argument("path dimension does not match kernel");
}

// Evaluates h at the path rows indexed by idx[0..r).
class TupleEvaluator {
 public:
  TupleEvaluator(const SeriesPath& path, const KernelSpec& kernel)
      : path_(path), kernel_(kernel), states_(use_states(path, kernel)) {
    const auto r = static_cast<std::size_t>(kernel.order());
    points_.resize(r);
    state_buf_.resize(r);
  }

  double operator()(const int* idx) {
    const std::size_t r = points_.size();
    if (states_) {
      for (std::size_t i = 0; i < r; ++i) state_buf_[i] = path_.states[static_cast<std::size_t>(idx[i])];
      return kernel_.eval_states(state_buf_);
    }
    for (std::size_t i = 0; i < r; ++i) points_[i] = path_.row(static_cast<std::size_t>(idx[i]));
    return kernel_.evaluate(points_);
  }

 private:
  const SeriesPath& path_;
  const KernelSpec& kernel_;
  bool states_;
  std::vector<Point> points_;
  std::vector<int> state_buf_;
};

}  // namespace

bool has_ties(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

std::int64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t inv = 0;
  const std::size_t n = v.size();
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inv += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    v.swap(buf);
  }
  return inv;
}

namespace {

// Concordant minus discordant pairs when neither coordinate has ties.
std::int64_t concordance_no_ties(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t pairs = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t discordant = count_inversions(ys);
  return pairs - 2 * discordant;
}

std::int64_t concordance_brute(std::span<const double> x, std::span<const double> y) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) total += sign(x[i] - x[j]) * sign(y[i] - y[j]);
  return total;
}

void require_bivariate(const SeriesPath& path) {
  if (path.dim != 2) throw std::invalid_argument("expected a bivariate path");
}

}  // namespace

std::vector<double> rank_vector(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i + 1);
  return r;
}

double rank_correlation(std::span<const double> rx, std::span<const double> ry) {
  if (rx.size() != ry.size()) throw std::invalid_argument("rank vectors differ in length");
  const double mean = (static_cast<double>(rx.size()) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < rx.size(); ++t) {
    const double a = rx[t] - mean, b = ry[t] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return sxy / std::sqrt(sxx * syy);
}

double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(out);
}

double u_statistic(const SeriesPath& path, const KernelSpec& kernel, double max_terms) {
  const int r = kernel.order();
  const auto T = static_cast<int>(path.length);
  if (T < r) throw std::invalid_argument("path shorter than kernel order");
  const double terms = binomial(T, r);
  if (terms > max_terms) throw std::length_error("too many U-statistic terms for enumeration");
  check_point_dim(path, kernel);

  TupleEvaluator eval(path, kernel);
  std::vector<int> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), 0);
  KahanSum acc;
  for (;;) {
    acc.add(eval(idx.data()));
    // Colex successor: bump the lowest position that has room.
    int i = 0;
    while (i < r) {
      const int limit = (i + 1 < r) ? idx[static_cast<std::size_t>(i + 1)] : T;
      if (idx[static_cast<std::size_t>(i)] + 1 < limit) break;
      ++i;
    }
    if (i == r) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = 0; j < i; ++j) idx[static_cast<std::size_t>(j)] = j;
  }
  return acc.sum / terms;
}

double u_statistic_fast(const SeriesPath& path, const KernelSpec& kernel) {
  switch (kernel.kind()) {
    case KernelKind::Mean: {
      if (path.length < 1) throw std::invalid_argument("path shorter than kernel order");
      check_point_dim(path, kernel);
      KahanSum acc;
      for (double v : path.values) {
        if (std::abs(v) > kernel.bound()) throw std::domain_error("value exceeds kernel bound");
        acc.add(v);
      }
      return acc.sum / static_cast<double>(path.length);
    }
    case KernelKind::SignProduct:
      return kendall_tau(path);
    case KernelKind::SpearmanSym: {
      require_bivariate(path);
      if (path.length < 3) throw std::invalid_argument("path shorter than kernel order");
      const auto x = path.column(0), y = path.column(1);
      if (!has_ties(x) && !has_ties(y)) return spearman_rho3(x, y);
      return u_statistic(path, kernel);
    }
    default:
      return u_statistic(path, kernel);
  }
}

double kendall_tau(const SeriesPath& path) {
  require_bivariate(path);
  const auto x = path.column(0), y = path.column(1);
  return kendall_tau(x, y);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("columns differ in length");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau needs T >= 2");
  const std::int64_t net = (has_ties(x) || has_ties(y)) ? concordance_brute(x, y) : concordance_no_ties(x, y);
  return static_cast<double>(net) / binomial(static_cast<std::int64_t>(x.size()), 2);
}

double kendall_tau_brute(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("columns differ in length");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau needs T >= 2");
  return static_cast<double>(concordance_brute(x, y)) / binomial(static_cast<std::int64_t>(x.size()), 2);
}

double spearman_rho3(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("columns differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("rho3 needs T >= 3");
  if (has_ties(x) || has_ties(y)) throw std::invalid_argument("rho3 fast path requires no ties");
  // a_t = sum_{t' != t} sign(x_t - x_t') = 2 rank - (T + 1).
  const auto rx = rank_vector(x), ry = rank_vector(y);
  const double shift = static_cast<double>(n + 1);
  double ab = 0.0;
  for (std::size_t t = 0; t < n; ++t) ab += (2.0 * rx[t] - shift) * (2.0 * ry[t] - shift);
  const double net = static_cast<double>(concordance_no_ties(x, y));
  const double nd = static_cast<double>(n);
  return 3.0 * (ab - 2.0 * net) / (nd * (nd - 1.0) * (nd - 2.0));
}

SpearmanResult spearman_rho(const SeriesPath& path) {
  require_bivariate(path);
  const auto x = path.column(0), y = path.column(1);
  return spearman_rho(x, y);
}

SpearmanResult spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("columns differ in length");
  if (x.size() < 3) throw std::invalid_argument("spearman_rho needs T >= 3");
  if (has_ties(x) || has_ties(y)) throw std::invalid_argument("spearman_rho requires no ties");
  SpearmanResult out;
  out.rho = rank_correlation(rank_vector(x), rank_vector(y));
  out.rho3 = spearman_rho3(x, y);
  out.tau = kendall_tau(x, y);
  return out;
}

double hoeffding_decoupling_average(const SeriesPath& path, const KernelSpec& kernel,
                                    const std::vector<std::vector<int>>& permutations) {
  const int r = kernel.order();
  const auto T = static_cast<int>(path.length);
  if (T < r) throw std::invalid_argument("path shorter than kernel order");
  check_point_dim(path, kernel);
  const int blocks = T / r;
  TupleEvaluator eval(path, kernel);

  auto block_mean = [&](const std::vector<int>& perm) {
    double s = 0.0;
    for (int b = 0; b < blocks; ++b) s += eval(perm.data() + static_cast<std::ptrdiff_t>(b) * r);
    return s / blocks;
  };

  KahanSum acc;
  std::size_t count = 0;
  if (permutations.empty()) {
    if (T > 8) throw std::invalid_argument("all permutations only supported for T <= 8");
    std::vector<int> perm(static_cast<std::size_t>(T));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      acc.add(block_mean(perm));
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<char> seen(static_cast<std::size_t>(T));
    for (const auto& perm : permutations) {
      if (perm.size() != static_cast<std::size_t>(T)) throw std::invalid_argument("permutation has wrong length");
      std::fill(seen.begin(), seen.end(), 0);
      for (int v : perm) {
        if (v < 0 || v >= T || seen[static_cast<std::size_t>(v)]) throw std::invalid_argument("not a permutation of [T]");
        seen[static_cast<std::size_t>(v)] = 1;
      }
      acc.add(block_mean(perm));
      ++count;
    }
  }
  return acc.sum / static_cast<double>(count);
}

std::vector<double> kernel_state_table(const FiniteMarkovChain& chain, const KernelSpec& kernel) {
  const int s = chain.state_count();
  const int r = kernel.order();
  const double size = std::pow(static_cast<double>(s), r);
  if (size > 1e8) throw std::length_error("state tuple table too large");
  const bool table = kernel.kind() == KernelKind::BoundedCustom;
  if (table && kernel.state_count() != s) throw std::invalid_argument("kernel alphabet does not match chain");

  std::vector<std::vector<double>> values;
  if (!table) {
    if (chain.state_values()) {
      values = *chain.state_values();
    } else {
      for (int i = 0; i < s; ++i) values.push_back({static_cast<double>(i)});
    }
    const std::size_t need = kernel.point_dimension();
    if (need != 0 && values.front().size() != need) throw std::invalid_argument("state values do not match kernel");
  }

  std::vector<double> out(static_cast<std::size_t>(size));
  std::vector<int> tuple(static_cast<std::size_t>(r), 0);
  std::vector<Point> points(static_cast<std::size_t>(r));
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rest = flat;
    for (int i = r - 1; i >= 0; --i) {
      tuple[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::size_t>(s));
      rest /= static_cast<std::size_t>(s);
    }
    if (table) {
      out[flat] = kernel.eval_states(tuple);
    } else {
      for (int i = 0; i < r; ++i)
        points[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
      out[flat] = kernel(points);
    }
  }
  return out;
}

double theta_independent(const FiniteMarkovChain& chain, const KernelSpec& kernel) {
  const auto h = kernel_state_table(chain, kernel);
  const auto s = static_cast<std::size_t>(chain.state_count());
  const int r = kernel.order();
  const Eigen::VectorXd& pi = chain.stationary();
  KahanSum acc;
  for (std::size_t flat = 0; flat < h.size(); ++flat) {
    double w = 1.0;
    std::size_t rest = flat;
    for (int i = 0; i < r; ++i) {
      w *= pi(static_cast<Eigen::Index>(rest % s));
      rest /= s;
    }
    acc.add(w * h[flat]);
  }
  return acc.sum;
}

MonteCarloEstimate theta_independent_mc(const ProcessSpec& spec, const KernelSpec& kernel, std::size_t draws,
                                        const StreamKey& key) {
  if (draws < 2) throw std::invalid_argument("need at least 2 draws");
  validate(spec);
  CounterRng rng(key);
  const auto r = static_cast<std::size_t>(kernel.order());
  std::vector<std::vector<double>> sample(r);
  std::vector<Point> points(r);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < draws; ++n) {
    for (std::size_t i = 0; i < r; ++i) {
      sample[i] = sample_marginal(spec, rng);
      points[i] = sample[i];
    }
    const double v = kernel(points);
    const double delta = v - mean;
    mean += delta / static_cast<double>(n + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate out;
  out.value = mean;
  out.draws = draws;
  out.std_error = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  return out;
}

}  // namespace mixstat
