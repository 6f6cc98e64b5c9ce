// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code is
// non-zero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixstat/bounds.hpp"
#include "mixstat/decompose.hpp"
#include "mixstat/harness/config.hpp"
#include "mixstat/harness/experiments.hpp"
#include "mixstat/mixing.hpp"
#include "mixstat/ustat.hpp"
#include "test_support.hpp"

using namespace mixstat;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Set partitions of {0..s-1} as block labels.
void set_partitions(int s, std::vector<std::vector<int>>& out) {
  std::vector<int> labels(static_cast<std::size_t>(s), 0);
  std::function<void(int, int)> rec = [&](int i, int blocks) {
    if (i == s) {
      out.push_back(labels);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      labels[static_cast<std::size_t>(i)] = b;
      rec(i + 1, std::max(blocks, b + 1));
    }
  };
  rec(0, 0);
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, int n) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  for (int i = 0; i < n; ++i) out = out * P;
  return out;
}

// Sup over partition pairs of (1/2) sum |P(A_i B_j) - P(A_i) P(B_j)| for (X_0, X_n).
double brute_beta(const FiniteMarkovChain& c, int n) {
  const int s = c.state_count();
  const Eigen::MatrixXd Q = c.stationary().asDiagonal() * matrix_power(c.transition(), n);
  std::vector<std::vector<int>> parts;
  set_partitions(s, parts);
  double best = 0.0;
  for (const auto& pa : parts)
    for (const auto& pb : parts) {
      Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(s, s);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) joint(pa[static_cast<std::size_t>(i)], pb[static_cast<std::size_t>(j)]) += Q(i, j);
      const Eigen::VectorXd ma = joint.rowwise().sum();
      const Eigen::VectorXd mb = joint.colwise().sum().transpose();
      best = std::max(best, 0.5 * (joint - ma * mb.transpose()).cwiseAbs().sum());
    }
  return best;
}

KernelSpec random_table(int states, int order, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<double> raw(static_cast<std::size_t>(std::pow(states, order)));
  for (double& v : raw) v = u(rng);
  return KernelSpec::bounded_custom(
      states, order,
      [&raw, states](std::span<const int> t) {
        std::size_t idx = 0;
        for (int x : t) idx = idx * static_cast<std::size_t>(states) + static_cast<std::size_t>(x);
        return raw[idx];
      },
      bound);
}

Outcome criterion1() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(2, 200);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t T = len(rng);
    const auto x = test::distinct_values(T, rng), y = test::distinct_values(T, rng);
    const auto path = SeriesPath::from_columns({x, y});
    const double pairs = static_cast<double>(T) * static_cast<double>(T - 1) / 2.0;
    const double brute = static_cast<double>(test::brute_concordance(x, y)) / pairs;
    const double fast = kendall_tau(path);
    if (fast != brute || fast != u_statistic(path, KernelSpec::sign_product())) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 1000 paths, T in [2, 200], tolerance 0"};
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> len(5, 50);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t T = len(rng);
    const auto x = test::distinct_values(T, rng), y = test::distinct_values(T, rng);
    const double rho = spearman_rho(SeriesPath::from_columns({x, y})).rho;
    const double Td = static_cast<double>(T);
    const double tau = static_cast<double>(test::brute_concordance(x, y)) / (Td * (Td - 1) / 2.0);
    const double rho3 = test::brute_rho3(x, y);
    worst = std::max(worst, std::abs(rho - (Td - 2) / (Td + 1) * rho3 - 3 * tau / (Td + 1)));
  }
  return {worst <= 1e-10, "max residual " + fmt(worst) + " over 200 paths (tolerance 1e-10)"};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  int cases = 0;
  for (int i = 0; i < 50; ++i) {
    for (std::size_t T = 2; T <= 8; ++T) {
      const auto path = test::random_bivariate(T, rng);
      for (const auto& k : {KernelSpec::sign_product(), KernelSpec::spearman_sym()}) {
        if (T < static_cast<std::size_t>(k.order())) continue;
        worst = std::max(worst, std::abs(hoeffding_decoupling_average(path, k) - u_statistic(path, k)));
        ++cases;
      }
    }
  }
  return {worst <= 1e-12, "max |decoupled - U| " + fmt(worst) + " over " + std::to_string(cases) + " cases (tolerance 1e-12)"};
}

Outcome criterion4() {
  std::mt19937_64 rng(404);
  CounterRng crng(StreamKey{404, 0, 0});
  double worst_residual = 0.0, worst_p1 = 0.0, worst_b = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int s = 2 + static_cast<int>(rng() % 3);
    const int r = 2 + static_cast<int>(rng() % 2);
    const int T = r + static_cast<int>(rng() % static_cast<std::uint64_t>(41 - r));
    const double M = 0.25 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const auto chain = FiniteMarkovChain::random(s, crng);
    const auto kernel = random_table(s, r, M, rng);
    const auto path = generate(ProcessSpec{MarkovChainProcess{chain, std::nullopt}, 404}, static_cast<std::size_t>(T),
                               StreamKey{404, static_cast<std::uint64_t>(i), 0});
    const auto rep = decompose(path, chain, kernel);
    worst_residual = std::max(worst_residual, std::abs(rep.residual));
    worst_p1 = std::max(worst_p1, rep.p1_max_abs);
    worst_b = std::max(worst_b, rep.b_term_max_abs / (2 * M));
  }
  const bool pass = worst_residual <= 1e-10 && worst_p1 <= 1e-10 && worst_b <= 1.0;
  return {pass, "500 instances: max residual " + fmt(worst_residual) + " (<= 1e-10), max |E[B | history]| " +
                    fmt(worst_p1) + " (<= 1e-10), max |B|/2M " + fmt(worst_b) + " (<= 1)"};
}

Outcome criterion5() {
  const auto flip = FiniteMarkovChain::symmetric_flip(0.25);
  double closed_err = 0.0;
  for (int n = 1; n <= 10; ++n) {
    const double target = 0.5 * std::pow(0.5, n);
    closed_err = std::max({closed_err, std::abs(beta_coeff(flip, n) - target), std::abs(phi_coeff(flip, n) - target)});
  }
  const auto prof = mixing_profile(flip, MixingKind::Beta, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const double gamma = prof.fitted_gamma.value_or(0.0);
  const double gamma_rel = std::abs(gamma - std::log(2.0)) / std::log(2.0);

  CounterRng rng(StreamKey{505, 0, 0});
  int order_violations = 0;
  double partition_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int s = 2 + i % 3;
    const auto c = FiniteMarkovChain::random(s, rng);
    for (int n = 1; n <= 8; ++n) {
      const double a = alpha_coeff(c, n), b = beta_coeff(c, n), f = phi_coeff(c, n);
      if (!(a <= b && b <= f)) ++order_violations;
      if (n <= 3) partition_err = std::max(partition_err, std::abs(brute_beta(c, n) - b));
    }
  }
  const bool pass = closed_err <= 1e-12 && gamma_rel <= 0.02 && order_violations == 0 && partition_err <= 1e-12;
  return {pass, "closed-form error " + fmt(closed_err) + " (<= 1e-12), gamma " + fmt(gamma) + " rel. error " +
                    fmt(gamma_rel) + " (<= 0.02), ordering violations " + std::to_string(order_violations) +
                    " on 100 chains, partition-beta error " + fmt(partition_err) + " (<= 1e-12)"};
}

Outcome criterion6() {
  CounterRng rng(StreamKey{606, 0, 0});
  double worst = -1.0;
  long checks = 0;
  for (int s = 2; s <= 4; ++s) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto c = FiniteMarkovChain::random(s, rng);
      std::vector<std::vector<Conditioning>> events;
      for (int a = 0; a < s; ++a) {
        events.push_back({{0, a}});
        for (int b = 0; b < s; ++b)
          for (int t2 : {1, 2}) events.push_back({{0, a}, {t2, b}});
      }
      for (int n = 1; n <= 6; ++n) {
        const double bound = 2.0 * phi_coeff(c, n) + 1e-12;
        for (const auto& ev : events)
          for (int j = 1; j <= 3; ++j) {
            worst = std::max(worst, conditional_phi_coeff(c, ev, j, n) - bound);
            ++checks;
          }
      }
    }
  }
  return {worst <= 0.0, std::to_string(checks) + " checks, max (conditional phi - 2 phi - 1e-12) = " + fmt(worst) + " (<= 0)"};
}

json copula_pair() {
  return json{{"kind", "gaussian_copula"}, {"temporal", 0.5}, {"structure", "equicorrelated"}, {"rho", 0.5}, {"dimension", 2}};
}

Outcome criterion7() {
  json doc{{"schema_version", 1},
           {"experiment", "tail"},
           {"seed", 707},
           {"threads", 0},
           {"process", copula_pair()},
           {"kernel", "sign_product"},
           {"T", {250, 500, 1000, 2000, 4000}},
           {"replications", 500},
           {"tail", {{"x_grid", {0.0, 0.05, 0.1}}}}};
  const auto res = harness::run_experiment(harness::parse_config(doc));
  const auto& slope_json = res.result.at("rms_slope");
  if (slope_json.is_null()) return {false, "slope undefined"};
  const double slope = slope_json.get<double>();
  std::string rms;
  for (const auto& r : res.result.at("rms")) rms += " " + fmt(r.at("rms").get<double>());
  return {std::abs(slope + 0.5) <= 0.05, "log RMS vs log T slope " + fmt(slope) + " (target -0.5 +/- 0.05); RMS by T:" + rms +
                                             "; theta oracle " + fmt(res.result.at("theta").at("value").get<double>())};
}

Outcome criterion8() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.005 * i);
  json doc{{"schema_version", 1},
           {"experiment", "tail"},
           {"seed", 808},
           {"threads", 0},
           {"process", copula_pair()},
           {"kernel", "sign_product"},
           {"T", {250, 500, 2000}},
           {"replications", 10000},
           {"tail", {{"x_grid", grid}, {"calibrate_T", {250, 500}}, {"holdout_T", {2000}}, {"oracle_draws", 4000000}}}};
  const auto res = harness::run_experiment(harness::parse_config(doc));
  const auto& cal = res.result.at("calibration");
  int failures = 0, cells = 0;
  double worst_excess = 0.0, worst_x = 0.0;
  for (const auto& cell : res.result.at("cells")) {
    if (cell.at("T").get<int>() != 2000) continue;
    ++cells;
    const double excess = cell.at("empirical").get<double>() - 3 * cell.at("stderr").get<double>() - cell.at("bound").get<double>();
    if (excess > 0) ++failures;
    if (excess > worst_excess) {
      worst_excess = excess;
      worst_x = cell.at("x").get<double>();
    }
  }
  return {failures == 0, "c5 = " + fmt(cal.at("c5").get<double>()) + " (c4 = 1) from T in {250, 500}; held-out T = 2000: " +
                             std::to_string(failures) + "/" + std::to_string(cells) +
                             " grid points exceed bound + 3 SE (worst excess " + fmt(worst_excess) + " at x = " + fmt(worst_x) + ")"};
}

Outcome criterion9() {
  const json table{{"states", 2},
                   {"order", 2},
                   {"entries", {{{"tuple", {0, 0}}, {"value", 0.5}}, {{"tuple", {1, 1}}, {"value", 0.5}}}},
                   {"default", -0.5}};
  std::vector<int> lengths;
  for (int T = 10; T <= 80; T += 10) lengths.push_back(T);
  json doc{{"schema_version", 1},
           {"experiment", "bias"},
           {"seed", 909},
           {"process", {{"kind", "markov_chain"}, {"transition", {{0.75, 0.25}, {0.25, 0.75}}}}},
           {"kernel", {{"table", table}}},
           {"T", lengths}};
  const auto res = harness::run_experiment(harness::parse_config(doc));
  // Independent closed form: E h(X_t, X_{t+g}) = 0.5^(g+1), theta = 0.
  double worst_oracle = 0.0;
  for (const auto& p : res.result.at("points")) {
    const int T = p.at("T").get<int>();
    double ts = 0.0;
    for (int g = 1; g < T; ++g) ts += (T - g) * std::pow(0.5, g + 1);
    ts /= T * (T - 1) / 2.0;
    worst_oracle = std::max(worst_oracle, std::abs(p.at("theta_star").get<double>() - ts));
  }
  const double slope = res.result.at("sqrt_T_bias_slope").get<double>();
  const double c = res.result.at("fitted_c").get<double>();
  const bool pass = slope <= 0.02 && worst_oracle <= 1e-14;
  return {pass, "sqrt(T)|theta* - theta| bounded by c = " + fmt(c) + "; log-log slope " + fmt(slope) +
                    " (<= 0.02); exact theta* vs closed form max error " + fmt(worst_oracle)};
}

Outcome criterion10() {
  json doc{{"schema_version", 1},
           {"experiment", "scaling"},
           {"seed", 1010},
           {"threads", 0},
           {"process", {{"kind", "gaussian_copula"}, {"temporal", 0.5}, {"structure", "toeplitz"}, {"rho", 0.5}}},
           {"T", {500, 1000, 2000}},
           {"replications", 200},
           {"scaling", {{"p", {10, 20, 40}}, {"estimator", "kendall"}, {"oracle_samples", 100000}}}};
  const auto res = harness::run_experiment(harness::parse_config(doc));
  const double spread = res.result.at("ratio_spread").get<double>();
  std::string ratios;
  for (const auto& cell : res.result.at("cells")) ratios += " " + fmt(cell.at("ratio_to_rate").get<double>());
  return {spread < 1.5, "max/min median-deviation-to-rate ratio " + fmt(spread) + " (< 1.5); ratios:" + ratios};
}

Outcome criterion11() {
  json doc{{"schema_version", 1},
           {"experiment", "mgf-check"},
           {"seed", 1111},
           {"mgf", {{"summands", {10, 20, 30, 40, 50}}, {"draws", 200000}, {"eta_points", 50}}}};
  const auto res = harness::run_experiment(harness::parse_config(doc));
  double worst = 0.0;
  int violations = 0;
  for (const auto& s : res.result.at("sums")) {
    worst = std::max(worst, s.at("max_ratio").get<double>());
    violations += s.at("violations").get<int>();
  }
  return {res.ok() && violations == 0, "5 sums of 10-50 summands, 50-point eta grid: " + std::to_string(violations) +
                                           " violations, max empirical/envelope ratio " + fmt(worst) + " (<= 1)"};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> kCriteria = {
    {"kendall fast path equals pairwise U-statistic", criterion1},
    {"spearman rank identity", criterion2},
    {"decoupling identity", criterion3},
    {"telescoping decomposition with P1 and P2", criterion4},
    {"exact mixing coefficients", criterion5},
    {"conditional phi bounded by twice phi", criterion6},
    {"concentration rate slope", criterion7},
    {"held-out tail dominance", criterion8},
    {"bias bounded at root-T scale", criterion9},
    {"max-norm deviation scaling", criterion10},
    {"combined Bernstein envelope dominance", criterion11},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-11); default runs all")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = kCriteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
    std::cout << "AC" << i + 1 << ' ' << (out.pass ? "PASS" : "FAIL") << ": " << kCriteria[i].first << " | "
              << out.detail << " | " << fmt(secs.count()) << " s" << std::endl;
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
