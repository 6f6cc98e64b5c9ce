#include "mixstat/hidim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mixstat/parallel.hpp"
#include "mixstat/ustat.hpp"

namespace mixstat {
namespace {

void check_shape(const SeriesPath& data) {
  if (data.length < 3) throw std::invalid_argument("correlation matrix needs T >= 3");
  if (data.dim < 2) throw std::invalid_argument("correlation matrix needs p >= 2");
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Upper-triangle pairs (j, k), j < k, in row order.
std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t p) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j + 1; k < p; ++k) out.emplace_back(j, k);
  return out;
}

Eigen::MatrixXd kendall_fill(const std::vector<std::vector<double>>& cols, std::size_t threads) {
  const std::size_t p = cols.size();
  const std::size_t n = cols.front().size();
  bool ties = false;
  for (const auto& c : cols) ties = ties || has_ties(c);
  std::vector<std::vector<std::size_t>> order(p);
  if (!ties) {
    for (std::size_t j = 0; j < p; ++j) {
      order[j].resize(n);
      std::iota(order[j].begin(), order[j].end(), std::size_t{0});
      std::sort(order[j].begin(), order[j].end(),
                [&](std::size_t a, std::size_t b) { return cols[j][a] < cols[j][b]; });
    }
  }
  const auto pairs = upper_pairs(p);
  std::vector<double> values(pairs.size());
  const double total = binomial(static_cast<std::int64_t>(n), 2);
  const auto pair_count = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto [j, k] = pairs[i];
    if (ties) {
      values[i] = kendall_tau(cols[j], cols[k]);
      return;
    }
    std::vector<double> ys(n);
    for (std::size_t t = 0; t < n; ++t) ys[t] = cols[k][order[j][t]];
    const std::int64_t net = pair_count - 2 * count_inversions(ys);
    values[i] = static_cast<double>(net) / total;
  });
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(pairs[i].first), k = static_cast<Eigen::Index>(pairs[i].second);
    m(j, k) = m(k, j) = values[i];
  }
  return m;
}

Eigen::MatrixXd spearman_fill(const std::vector<std::vector<double>>& cols, std::size_t threads) {
  const std::size_t p = cols.size();
  std::vector<std::vector<double>> ranks(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (has_ties(cols[j])) throw std::invalid_argument("spearman matrix requires no ties");
    ranks[j] = rank_vector(cols[j]);
  }
  const auto pairs = upper_pairs(p);
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    values[i] = rank_correlation(ranks[pairs[i].first], ranks[pairs[i].second]);
  });
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(pairs[i].first), k = static_cast<Eigen::Index>(pairs[i].second);
    m(j, k) = m(k, j) = values[i];
  }
  return m;
}

Eigen::MatrixXd fill(const std::vector<std::vector<double>>& cols, CorrelationKind kind, std::size_t threads) {
  for (const auto& c : cols)
    if (is_constant(c)) throw std::invalid_argument("degenerate constant coordinate");
  return kind == CorrelationKind::Kendall ? kendall_fill(cols, threads) : spearman_fill(cols, threads);
}

std::vector<std::vector<double>> columns(const SeriesPath& data) {
  std::vector<std::vector<double>> cols(data.dim);
  for (std::size_t c = 0; c < data.dim; ++c) cols[c] = data.column(c);
  return cols;
}

}  // namespace

std::string_view to_string(CorrelationKind kind) {
  return kind == CorrelationKind::Kendall ? "kendall" : "spearman";
}

CorrelationKind correlation_kind_from_string(std::string_view name) {
  if (name == "kendall") return CorrelationKind::Kendall;
  if (name == "spearman") return CorrelationKind::Spearman;
  throw std::invalid_argument("unknown correlation estimator: " + std::string(name));
}

CorrelationMatrixEstimate correlation_matrix(const SeriesPath& data, CorrelationKind kind, std::size_t threads) {
  check_shape(data);
  CorrelationMatrixEstimate out;
  out.kind = kind;
  out.dimension = data.dim;
  out.length = data.length;
  out.matrix = fill(columns(data), kind, threads);
  return out;
}

CorrelationMatrixEstimate kendall_matrix(const SeriesPath& data, std::size_t threads) {
  return correlation_matrix(data, CorrelationKind::Kendall, threads);
}

CorrelationMatrixEstimate spearman_matrix(const SeriesPath& data, std::size_t threads) {
  return correlation_matrix(data, CorrelationKind::Spearman, threads);
}

PopulationMatrix population_matrix_oracle(const ProcessSpec& spec, CorrelationKind kind, std::size_t samples,
                                          const StreamKey& key, std::size_t batches, std::size_t threads) {
  if (samples < kMinOracleSamples) throw std::invalid_argument("oracle needs at least 10^4 samples");
  if (batches < 2 || samples / batches < 3) throw std::invalid_argument("invalid oracle batch count");
  validate(spec);
  const std::size_t p = process_dimension(spec);
  if (p < 2) throw std::invalid_argument("oracle needs p >= 2");
  const std::size_t per_batch = samples / batches;

  std::vector<Eigen::MatrixXd> estimates(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    CounterRng rng(StreamKey{key.seed, key.replication, key.stream * 1000003ULL + b});
    std::vector<std::vector<double>> cols(p, std::vector<double>(per_batch));
    for (std::size_t i = 0; i < per_batch; ++i) {
      const auto draw = sample_marginal(spec, rng);
      for (std::size_t c = 0; c < p; ++c) cols[c][i] = draw[c];
    }
    estimates[b] = fill(cols, kind, threads);
  }
  const auto dim = static_cast<Eigen::Index>(p);
  PopulationMatrix out;
  out.kind = kind;
  out.dimension = p;
  out.samples = per_batch * batches;
  out.matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : estimates) out.matrix += e;
  out.matrix /= static_cast<double>(batches);
  out.std_error = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& e : estimates) out.std_error += (e - out.matrix).cwiseAbs2();
  const double nb = static_cast<double>(batches);
  out.std_error = (out.std_error / (nb - 1.0) / nb).cwiseSqrt();
  out.matrix.diagonal().setOnes();
  out.std_error.diagonal().setZero();
  out.provenance = "iid draws from the stationary marginal of " + process_kind_name(spec) + ", " +
                   std::to_string(batches) + " batches of " + std::to_string(per_batch);
  return out;
}

double max_norm_deviation(const CorrelationMatrixEstimate& estimate, const PopulationMatrix& population) {
  if (estimate.kind != population.kind) throw std::invalid_argument("estimator kinds differ");
  if (estimate.matrix.rows() != population.matrix.rows() || estimate.matrix.cols() != population.matrix.cols())
    throw std::invalid_argument("matrix shapes differ");
  double best = 0.0;
  for (Eigen::Index j = 0; j < estimate.matrix.rows(); ++j)
    for (Eigen::Index k = 0; k < estimate.matrix.cols(); ++k)
      if (j != k) best = std::max(best, std::abs(estimate.matrix(j, k) - population.matrix(j, k)));
  return best;
}

double corollary_rate(double T, double p) { return std::sqrt(std::log(T * p) / T); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ScalingReport scaling_experiment(const ScalingSpec& spec) {
  if (spec.lengths.empty() || spec.dimensions.empty()) throw std::invalid_argument("grids must be non-empty");
  if (spec.replications < 1) throw std::invalid_argument("need at least one replication");
  if (!spec.family) throw std::invalid_argument("process family missing");

  ScalingReport report;
  report.kind = spec.kind;
  report.replications = spec.replications;
  std::size_t cell_index = 0;
  for (std::size_t d = 0; d < spec.dimensions.size(); ++d) {
    const std::size_t p = spec.dimensions[d];
    const ProcessSpec process = spec.family(p);
    report.populations.push_back(population_matrix_oracle(process, spec.kind, spec.oracle_samples,
                                                          StreamKey{spec.seed, 0, 1'000'000 + d}, 20, spec.threads));
    const PopulationMatrix& population = report.populations.back();
    for (std::size_t T : spec.lengths) {
      ScalingCell cell;
      cell.length = T;
      cell.dimension = p;
      cell.deviations.resize(spec.replications);
      const std::size_t c = cell_index++;
      parallel_for(spec.replications, spec.threads, [&](std::size_t i) {
        const SeriesPath path = generate(process, T, StreamKey{spec.seed, i, c});
        cell.deviations[i] = max_norm_deviation(correlation_matrix(path, spec.kind), population);
      });
      cell.q10 = quantile(cell.deviations, 0.10);
      cell.q25 = quantile(cell.deviations, 0.25);
      cell.median = quantile(cell.deviations, 0.50);
      cell.q75 = quantile(cell.deviations, 0.75);
      cell.q90 = quantile(cell.deviations, 0.90);
      cell.rate = corollary_rate(static_cast<double>(T), static_cast<double>(p));
      cell.ratio_to_rate = cell.median / cell.rate;
      report.cells.push_back(std::move(cell));
    }
  }

  for (std::size_t p : spec.dimensions) {
    ScalingSlope s;
    s.dimension = p;
    std::vector<double> lx, ly;
    for (const auto& cell : report.cells) {
      if (cell.dimension != p || !(cell.median > 0.0)) continue;
      lx.push_back(std::log(static_cast<double>(cell.length)));
      ly.push_back(std::log(cell.median));
    }
    const double mx = lx.empty() ? 0.0 : std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = ly.empty() ? 0.0 : std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (lx.size() >= 2 && sxx > 0.0) {
      s.defined = true;
      s.slope = sxy / sxx;
    }
    report.slopes.push_back(s);
  }

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& cell : report.cells) {
    lo = std::min(lo, cell.ratio_to_rate);
    hi = std::max(hi, cell.ratio_to_rate);
  }
  report.ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return report;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const CorrelationMatrixEstimate& m) {
  return nlohmann::json{{"kind", to_string(m.kind)}, {"p", m.dimension}, {"T", m.length}, {"matrix", matrix_json(m.matrix)}};
}

nlohmann::json to_json(const PopulationMatrix& m) {
  return nlohmann::json{{"kind", to_string(m.kind)},
                        {"p", m.dimension},
                        {"samples", m.samples},
                        {"provenance", m.provenance},
                        {"matrix", matrix_json(m.matrix)},
                        {"std_error", matrix_json(m.std_error)}};
}

nlohmann::json to_json(const ScalingReport& r) {
  nlohmann::json j;
  j["kind"] = to_string(r.kind);
  j["replications"] = r.replications;
  auto cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"T", c.length},
                     {"p", c.dimension},
                     {"quantiles", {{"q10", c.q10}, {"q25", c.q25}, {"median", c.median}, {"q75", c.q75}, {"q90", c.q90}}},
                     {"rate", c.rate},
                     {"ratio_to_rate", c.ratio_to_rate}});
  }
  j["cells"] = std::move(cells);
  auto slopes = nlohmann::json::array();
  for (const auto& s : r.slopes) {
    slopes.push_back({{"p", s.dimension},
                      {"defined", s.defined},
                      {"slope", s.defined ? nlohmann::json(s.slope) : nlohmann::json(nullptr)}});
  }
  j["slopes"] = std::move(slopes);
  j["ratio_spread"] = r.ratio_spread;
  auto pops = nlohmann::json::array();
  for (const auto& p : r.populations)
    pops.push_back({{"p", p.dimension}, {"samples", p.samples}, {"max_std_error", p.std_error.maxCoeff()}});
  j["populations"] = std::move(pops);
  return j;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

void write_scaling_csv(std::ostream& out, const ScalingReport& r) {
  out << "T,p,median_dev,ratio_to_rate\n" << std::setprecision(17);
  for (const auto& c : r.cells) out << c.length << ',' << c.dimension << ',' << c.median << ',' << c.ratio_to_rate << '\n';
}

}  // namespace mixstat
