#include "mixstat/processes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mixstat {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int draw_index(const Eigen::Ref<const Eigen::RowVectorXd>& probs, double u) {
  double acc = 0.0;
  const Eigen::Index n = probs.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    acc += probs(j);
    if (u < acc) return static_cast<int>(j);
  }
  // Rounding left u above the running total: take the last positive entry.
  for (Eigen::Index j = n - 1; j >= 0; --j)
    if (probs(j) > 0) return static_cast<int>(j);
  return static_cast<int>(n - 1);
}

void fill_state_values(SeriesPath& path, const FiniteMarkovChain& chain) {
  const auto& sv = chain.state_values();
  path.dim = sv ? sv->front().size() : 1;
  path.values.resize(path.length * path.dim);
  for (std::size_t t = 0; t < path.length; ++t) {
    const int s = path.states[t];
    if (sv) {
      std::copy((*sv)[static_cast<std::size_t>(s)].begin(), (*sv)[static_cast<std::size_t>(s)].end(),
                path.values.begin() + static_cast<std::ptrdiff_t>(t * path.dim));
    } else {
      path.values[t] = static_cast<double>(s);
    }
  }
}

}  // namespace

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GaussianCopulaProcess::GaussianCopulaProcess(Eigen::MatrixXd correlation, double temporal)
    : correlation_(std::move(correlation)), temporal_(temporal) {
  const Eigen::Index p = correlation_.rows();
  if (p < 1 || correlation_.cols() != p) throw std::invalid_argument("correlation matrix must be square");
  if (!(temporal_ > -1.0 && temporal_ < 1.0)) throw std::invalid_argument("temporal coefficient must lie in (-1, 1)");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (correlation_(i, i) != 1.0) throw std::invalid_argument("correlation matrix needs a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(correlation_(i, j) - correlation_(j, i)) > 1e-12)
        throw std::invalid_argument("correlation matrix must be symmetric");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation_);
  if (eig.info() != Eigen::Success) throw std::invalid_argument("correlation eigen-decomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10) throw std::invalid_argument("correlation matrix is not positive semidefinite");
  factor_ = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

GaussianCopulaProcess GaussianCopulaProcess::equicorrelated(std::size_t dimension, double rho, double temporal) {
  const auto p = static_cast<Eigen::Index>(dimension);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(p, p, rho);
  r.diagonal().setOnes();
  return GaussianCopulaProcess(r, temporal);
}

GaussianCopulaProcess GaussianCopulaProcess::toeplitz(std::size_t dimension, double rho, double temporal) {
  const auto p = static_cast<Eigen::Index>(dimension);
  Eigen::MatrixXd r(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return GaussianCopulaProcess(r, temporal);
}

std::string process_kind_name(const ProcessSpec& spec) {
  return std::visit(overloaded{[](const IidProcess&) { return std::string("iid"); },
                               [](const Ar1Process&) { return std::string("ar1"); },
                               [](const MDependentProcess&) { return std::string("m_dependent"); },
                               [](const MarkovChainProcess&) { return std::string("markov_chain"); },
                               [](const GaussianCopulaProcess&) { return std::string("gaussian_copula"); }},
                    spec.kind);
}

std::size_t process_dimension(const ProcessSpec& spec) {
  return std::visit(overloaded{[](const IidProcess& p) { return p.dimension; },
                               [](const Ar1Process& p) { return p.dimension; },
                               [](const MDependentProcess& p) { return p.dimension; },
                               [](const MarkovChainProcess& p) {
                                 const auto& sv = p.chain.state_values();
                                 return sv ? sv->front().size() : std::size_t{1};
                               },
                               [](const GaussianCopulaProcess& p) { return p.dimension(); }},
                    spec.kind);
}

void validate(const ProcessSpec& spec) {
  std::visit(overloaded{[](const IidProcess& p) {
                          if (p.dimension < 1) throw std::invalid_argument("dimension must be >= 1");
                        },
                        [](const Ar1Process& p) {
                          if (!(p.coefficient > -1.0 && p.coefficient < 1.0))
                            throw std::invalid_argument("AR(1) coefficient must lie strictly inside (-1, 1)");
                          if (p.dimension < 1) throw std::invalid_argument("dimension must be >= 1");
                        },
                        [](const MDependentProcess& p) {
                          if (p.window < 0) throw std::invalid_argument("m-dependence window must be >= 0");
                          if (p.dimension < 1) throw std::invalid_argument("dimension must be >= 1");
                        },
                        [](const MarkovChainProcess& p) {
                          if (p.start_state && (*p.start_state < 0 || *p.start_state >= p.chain.state_count()))
                            throw std::invalid_argument("start state out of range");
                        },
                        [](const GaussianCopulaProcess&) {}},
             spec.kind);
}

std::vector<double> SeriesPath::column(std::size_t c) const {
  if (c >= dim) throw std::out_of_range("column index out of range");
  std::vector<double> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = values[t * dim + c];
  return out;
}

SeriesPath SeriesPath::pair(std::size_t j, std::size_t k) const {
  if (j >= dim || k >= dim) throw std::out_of_range("column index out of range");
  SeriesPath out;
  out.length = length;
  out.dim = 2;
  out.values.resize(2 * length);
  for (std::size_t t = 0; t < length; ++t) {
    out.values[2 * t] = values[t * dim + j];
    out.values[2 * t + 1] = values[t * dim + k];
  }
  return out;
}

SeriesPath SeriesPath::from_rows(const std::vector<std::vector<double>>& rows) {
  SeriesPath out;
  out.length = rows.size();
  out.dim = rows.empty() ? 0 : rows.front().size();
  out.values.reserve(out.length * out.dim);
  for (const auto& r : rows) {
    if (r.size() != out.dim) throw std::invalid_argument("ragged rows");
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

SeriesPath SeriesPath::from_columns(const std::vector<std::vector<double>>& columns) {
  SeriesPath out;
  out.dim = columns.size();
  out.length = columns.empty() ? 0 : columns.front().size();
  out.values.resize(out.length * out.dim);
  for (std::size_t c = 0; c < out.dim; ++c) {
    if (columns[c].size() != out.length) throw std::invalid_argument("ragged columns");
    for (std::size_t t = 0; t < out.length; ++t) out.values[t * out.dim + c] = columns[c][t];
  }
  return out;
}

SeriesPath SeriesPath::from_states(std::vector<int> states, int state_count) {
  SeriesPath out;
  out.length = states.size();
  out.dim = 1;
  out.values.resize(out.length);
  for (std::size_t t = 0; t < out.length; ++t) {
    if (states[t] < 0 || states[t] >= state_count) throw std::invalid_argument("state index out of range");
    out.values[t] = static_cast<double>(states[t]);
  }
  out.states = std::move(states);
  return out;
}

SeriesPath generate(const ProcessSpec& spec, std::size_t length) {
  return generate(spec, length, StreamKey{spec.seed, 0, 0});
}

SeriesPath generate(const ProcessSpec& spec, std::size_t length, const StreamKey& key) {
  CounterRng rng(key);
  SeriesPath out = generate(spec, length, rng);
  out.stream = key;
  return out;
}

SeriesPath generate(const ProcessSpec& spec, std::size_t length, CounterRng& rng) {
  if (length < 1) throw std::invalid_argument("path length must be >= 1");
  validate(spec);
  std::normal_distribution<double> normal(0.0, 1.0);
  SeriesPath out;
  out.length = length;
  out.provenance = spec;

  std::visit(
      overloaded{
          [&](const IidProcess& p) {
            out.dim = p.dimension;
            out.values.resize(length * p.dimension);
            for (double& v : out.values) v = normal(rng);
          },
          [&](const Ar1Process& p) {
            out.dim = p.dimension;
            out.values.resize(length * p.dimension);
            const double sd0 = 1.0 / std::sqrt(1.0 - p.coefficient * p.coefficient);
            for (std::size_t c = 0; c < p.dimension; ++c) out.values[c] = sd0 * normal(rng);
            for (std::size_t t = 1; t < length; ++t)
              for (std::size_t c = 0; c < p.dimension; ++c)
                out.values[t * p.dimension + c] = p.coefficient * out.values[(t - 1) * p.dimension + c] + normal(rng);
          },
          [&](const MDependentProcess& p) {
            const auto m = static_cast<std::size_t>(p.window);
            out.dim = p.dimension;
            out.values.assign(length * p.dimension, 0.0);
            std::vector<double> base((length + m) * p.dimension);
            for (double& v : base) v = normal(rng);
            for (std::size_t t = 0; t < length; ++t)
              for (std::size_t c = 0; c < p.dimension; ++c) {
                double s = 0.0;
                for (std::size_t w = 0; w <= m; ++w) s += base[(t + w) * p.dimension + c];
                out.values[t * p.dimension + c] = s;
              }
          },
          [&](const MarkovChainProcess& p) {
            const auto& chain = p.chain;
            out.states.resize(length);
            int s = p.start_state ? *p.start_state : draw_index(chain.stationary().transpose(), rng.uniform());
            out.states[0] = s;
            for (std::size_t t = 1; t < length; ++t) {
              s = draw_index(chain.transition().row(s), rng.uniform());
              out.states[t] = s;
            }
            fill_state_values(out, chain);
          },
          [&](const GaussianCopulaProcess& p) {
            const auto d = static_cast<Eigen::Index>(p.dimension());
            out.dim = p.dimension();
            out.values.resize(length * out.dim);
            const double a = p.temporal();
            const double innovation = std::sqrt(1.0 - a * a);
            Eigen::VectorXd e(d);
            Eigen::VectorXd z(d);
            for (Eigen::Index i = 0; i < d; ++i) e(i) = normal(rng);
            z.noalias() = p.factor() * e;
            for (std::size_t t = 0; t < length; ++t) {
              if (t > 0) {
                for (Eigen::Index i = 0; i < d; ++i) e(i) = normal(rng);
                z = a * z + innovation * (p.factor() * e);
              }
              for (Eigen::Index i = 0; i < d; ++i)
                out.values[t * out.dim + static_cast<std::size_t>(i)] = standard_normal_cdf(z(i));
            }
          }},
      spec.kind);
  return out;
}

std::vector<double> sample_marginal(const ProcessSpec& spec, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return std::visit(
      overloaded{[&](const IidProcess& p) {
                   std::vector<double> v(p.dimension);
                   for (double& x : v) x = normal(rng);
                   return v;
                 },
                 [&](const Ar1Process& p) {
                   std::vector<double> v(p.dimension);
                   const double sd = 1.0 / std::sqrt(1.0 - p.coefficient * p.coefficient);
                   for (double& x : v) x = sd * normal(rng);
                   return v;
                 },
                 [&](const MDependentProcess& p) {
                   std::vector<double> v(p.dimension);
                   const double sd = std::sqrt(static_cast<double>(p.window + 1));
                   for (double& x : v) x = sd * normal(rng);
                   return v;
                 },
                 [&](const MarkovChainProcess& p) {
                   const int s = draw_index(p.chain.stationary().transpose(), rng.uniform());
                   const auto& sv = p.chain.state_values();
                   if (sv) return (*sv)[static_cast<std::size_t>(s)];
                   return std::vector<double>{static_cast<double>(s)};
                 },
                 [&](const GaussianCopulaProcess& p) {
                   const auto d = static_cast<Eigen::Index>(p.dimension());
                   Eigen::VectorXd e(d);
                   for (Eigen::Index i = 0; i < d; ++i) e(i) = normal(rng);
                   const Eigen::VectorXd z = p.factor() * e;
                   std::vector<double> v(p.dimension());
                   for (Eigen::Index i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = standard_normal_cdf(z(i));
                   return v;
                 }},
      spec.kind);
}

SeriesPath truncate_to_finite(const SeriesPath& path, std::span<const double> cuts) {
  if (cuts.empty()) throw std::invalid_argument("partition needs at least one cut point");
  for (std::size_t i = 1; i < cuts.size(); ++i)
    if (!(cuts[i] > cuts[i - 1])) throw std::invalid_argument("cut points must be strictly increasing");
  if (path.dim != 1) throw std::invalid_argument("truncation needs a one-dimensional path");
  std::vector<int> states(path.length);
  for (std::size_t t = 0; t < path.length; ++t) {
    states[t] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), path.values[t]) - cuts.begin());
  }
  SeriesPath out = SeriesPath::from_states(std::move(states), static_cast<int>(cuts.size()) + 1);
  out.provenance = path.provenance;
  out.stream = path.stream;
  return out;
}

SeriesPath m_dependent_from_iid(const SeriesPath& base, int window, const WindowAggregator& aggregator) {
  if (window < 0) throw std::invalid_argument("m-dependence window must be >= 0");
  if (base.dim != 1) throw std::invalid_argument("base path must be one-dimensional");
  const auto m = static_cast<std::size_t>(window);
  if (base.length < m + 1) throw std::invalid_argument("base path shorter than window + 1");
  SeriesPath out;
  out.length = base.length - m;
  out.dim = 1;
  out.values.resize(out.length);
  for (std::size_t t = 0; t < out.length; ++t) {
    out.values[t] = aggregator(std::span<const double>(base.values.data() + t, m + 1));
  }
  out.stream = base.stream;
  return out;
}

}  // namespace mixstat
