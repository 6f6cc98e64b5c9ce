#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mixstat/hidim.hpp"
#include "mixstat/ustat.hpp"
#include "test_support.hpp"

using namespace mixstat;

namespace {

ProcessSpec copula(std::size_t p, double rho, double temporal, std::uint64_t seed = 1) {
  return ProcessSpec{GaussianCopulaProcess::equicorrelated(p, rho, temporal), seed};
}

}  // namespace

TEST(Hidim, IdenticalCoordinatesGiveOne) {
  std::mt19937_64 rng(1);
  const auto x = test::distinct_values(50, rng);
  const auto path = SeriesPath::from_columns({x, x});
  EXPECT_EQ(kendall_matrix(path).matrix(0, 1), 1.0);
  EXPECT_EQ(spearman_matrix(path).matrix(1, 0), 1.0);
}

TEST(Hidim, EntriesMatchScalarEstimatorsExactly) {
  const auto path = generate(copula(6, 0.4, 0.3, 2), 300);
  const auto K = kendall_matrix(path, 2);
  const auto S = spearman_matrix(path, 2);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(K.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)), 1.0);
    EXPECT_EQ(S.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)), 1.0);
    for (std::size_t k = j + 1; k < 6; ++k) {
      const auto pair = path.pair(j, k);
      const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
      EXPECT_EQ(K.matrix(jj, kk), kendall_tau(pair));
      EXPECT_EQ(K.matrix(jj, kk), K.matrix(kk, jj));
      EXPECT_EQ(S.matrix(jj, kk), spearman_rho(pair).rho);
      EXPECT_EQ(S.matrix(jj, kk), S.matrix(kk, jj));
      EXPECT_LE(std::abs(K.matrix(jj, kk)), 1.0);
      EXPECT_LE(std::abs(S.matrix(jj, kk)), 1.0);
    }
  }
}

TEST(Hidim, ThreadCountDoesNotChangeResult) {
  const auto path = generate(copula(8, 0.2, 0.5, 3), 500);
  EXPECT_EQ(kendall_matrix(path, 1).matrix, kendall_matrix(path, 4).matrix);
}

TEST(Hidim, IndependentCoordinatesAreSmall) {
  const std::size_t T = 10'000;
  const auto path = generate(ProcessSpec{IidProcess{5}, 4}, T);
  const auto K = kendall_matrix(path);
  double max_off = 0.0;
  for (Eigen::Index j = 0; j < 5; ++j)
    for (Eigen::Index k = 0; k < 5; ++k)
      if (j != k) max_off = std::max(max_off, std::abs(K.matrix(j, k)));
  EXPECT_LE(max_off, 4.0 / std::sqrt(static_cast<double>(T)));
}

TEST(Hidim, Errors) {
  std::mt19937_64 rng(2);
  EXPECT_THROW(kendall_matrix(test::random_bivariate(2, rng)), std::invalid_argument);
  EXPECT_THROW(kendall_matrix(SeriesPath::from_columns({test::distinct_values(10, rng)})), std::invalid_argument);
  const std::vector<double> flat(10, 1.0);
  EXPECT_THROW(kendall_matrix(SeriesPath::from_columns({test::distinct_values(10, rng), flat})), std::invalid_argument);
  std::vector<double> tied = test::distinct_values(10, rng);
  tied[3] = tied[4];
  EXPECT_THROW(spearman_matrix(SeriesPath::from_columns({test::distinct_values(10, rng), tied})), std::invalid_argument);
  EXPECT_NO_THROW(kendall_matrix(SeriesPath::from_columns({test::distinct_values(10, rng), tied})));
  EXPECT_THROW(population_matrix_oracle(copula(2, 0.5, 0.0), CorrelationKind::Kendall, 9999, {}), std::invalid_argument);
}

TEST(Hidim, MaxNormDeviation) {
  PopulationMatrix pop;
  pop.kind = CorrelationKind::Kendall;
  pop.dimension = 3;
  pop.matrix = Eigen::MatrixXd::Identity(3, 3);
  CorrelationMatrixEstimate est;
  est.kind = CorrelationKind::Kendall;
  est.dimension = 3;
  est.matrix = pop.matrix;
  EXPECT_EQ(max_norm_deviation(est, pop), 0.0);
  est.matrix(0, 2) = est.matrix(2, 0) = 0.3;
  EXPECT_DOUBLE_EQ(max_norm_deviation(est, pop), 0.3);
  est.matrix(1, 1) = 5.0;  // diagonal ignored
  EXPECT_DOUBLE_EQ(max_norm_deviation(est, pop), 0.3);
  est.kind = CorrelationKind::Spearman;
  EXPECT_THROW(max_norm_deviation(est, pop), std::invalid_argument);
  est.kind = CorrelationKind::Kendall;
  est.matrix = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(max_norm_deviation(est, pop), std::invalid_argument);
}

TEST(Hidim, OracleIdentityIsZero) {
  const auto pop = population_matrix_oracle(copula(4, 0.0, 0.5), CorrelationKind::Kendall, 100'000, StreamKey{5, 0, 0});
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index k = j + 1; k < 4; ++k) EXPECT_LE(std::abs(pop.matrix(j, k)), 3 * pop.std_error(j, k));
  EXPECT_EQ(pop.samples, 100'000u);
  EXPECT_FALSE(pop.provenance.empty());
}

TEST(Hidim, OraclePerfectCorrelation) {
  Eigen::MatrixXd R(2, 2);
  R << 1.0, 1.0, 1.0, 1.0;
  const auto pop = population_matrix_oracle(ProcessSpec{GaussianCopulaProcess(R, 0.0), 1}, CorrelationKind::Kendall, 10'000,
                                            StreamKey{6, 0, 0});
  EXPECT_NEAR(pop.matrix(0, 1), 1.0, 1e-12);
}

TEST(Hidim, OracleHalfCorrelationAgainstClosedForm) {
  const auto spec = copula(2, 0.5, 0.5);
  const auto a = population_matrix_oracle(spec, CorrelationKind::Kendall, 1'000'000, StreamKey{7, 0, 0});
  const auto b = population_matrix_oracle(spec, CorrelationKind::Kendall, 1'000'000, StreamKey{7, 0, 0});
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_LE(a.std_error(0, 1), 0.002);
  // Gaussian dependence: tau = (2 / pi) arcsin(rho).
  const double tau = 2.0 / std::numbers::pi * std::asin(0.5);
  EXPECT_NEAR(a.matrix(0, 1), tau, 3 * a.std_error(0, 1));
  const auto s = population_matrix_oracle(spec, CorrelationKind::Spearman, 1'000'000, StreamKey{7, 0, 1});
  EXPECT_NEAR(s.matrix(0, 1), 6.0 / std::numbers::pi * std::asin(0.25), 3 * s.std_error(0, 1) + 1e-5);
}

TEST(Hidim, Quantiles) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(corollary_rate(100, 10), std::sqrt(std::log(1000.0) / 100.0));
}

TEST(Scaling, SingleCellSingleReplication) {
  ScalingSpec spec;
  spec.family = [](std::size_t p) { return copula(p, 0.3, 0.5); };
  spec.lengths = {200};
  spec.dimensions = {3};
  spec.replications = 1;
  spec.seed = 9;
  spec.oracle_samples = 10'000;
  const auto rep = scaling_experiment(spec);
  ASSERT_EQ(rep.cells.size(), 1u);
  EXPECT_EQ(rep.cells[0].deviations.size(), 1u);
  ASSERT_EQ(rep.slopes.size(), 1u);
  EXPECT_FALSE(rep.slopes[0].defined);
  EXPECT_TRUE(to_json(rep).at("slopes")[0].at("slope").is_null());
}

TEST(Scaling, IidSlopeIsMinusOneHalf) {
  ScalingSpec spec;
  spec.family = [](std::size_t p) { return ProcessSpec{IidProcess{p}, 0}; };
  spec.lengths = {250, 500, 1000, 2000, 4000};
  spec.dimensions = {6};
  spec.replications = 200;
  spec.seed = 10;
  spec.oracle_samples = 1'000'000;
  const auto rep = scaling_experiment(spec);
  ASSERT_TRUE(rep.slopes[0].defined);
  EXPECT_NEAR(rep.slopes[0].slope, -0.5, 0.05);
  // Median deviation non-increasing as T doubles.
  for (std::size_t i = 1; i < rep.cells.size(); ++i) EXPECT_LE(rep.cells[i].median, rep.cells[i - 1].median);
  std::ostringstream csv;
  write_scaling_csv(csv, rep);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "T,p,median_dev,ratio_to_rate");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 5);
}

TEST(Scaling, MixingDeviatesAtLeastAsMuchAsIid) {
  auto run = [](double temporal) {
    ScalingSpec spec;
    spec.family = [temporal](std::size_t p) { return ProcessSpec{GaussianCopulaProcess::toeplitz(p, 0.5, temporal), 0}; };
    spec.lengths = {1000};
    spec.dimensions = {8};
    spec.replications = 200;
    spec.seed = 11;
    spec.oracle_samples = 400'000;
    return scaling_experiment(spec).cells[0];
  };
  const auto iid = run(0.0), mix = run(0.5);
  EXPECT_GE(mix.median, iid.median);
  for (const auto& c : {iid, mix}) {
    EXPECT_GT(c.ratio_to_rate, 0.1);
    EXPECT_LT(c.ratio_to_rate, 10.0);
  }
}

TEST(Hidim, MatrixCsvHasFullPrecision) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0;
  std::ostringstream out;
  write_matrix_csv(out, m);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  const auto comma = line.find(',');
  EXPECT_EQ(std::stod(line.substr(comma + 1)), 1.0 / 3.0);
}
