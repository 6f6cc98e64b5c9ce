#include "mixstat/harness/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "mixstat/decompose.hpp"
#include "mixstat/parallel.hpp"
#include "mixstat/series_io.hpp"
#include "mixstat/ustat.hpp"

namespace mixstat::harness {
namespace {

constexpr std::uint64_t kOracleStream = 0xFFFF'FFFFULL;

const FiniteMarkovChain* chain_of(const ExperimentConfig& c) {
  if (!c.process) return nullptr;
  const auto* mc = std::get_if<MarkovChainProcess>(&c.process->kind);
  return mc ? &mc->chain : nullptr;
}

// Least-squares slope of log y against log x; nullopt with fewer than two
// usable points.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return std::nullopt;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

void check_kernel_fits(const KernelSpec& kernel, const ProcessSpec& process) {
  if (kernel.kind() == KernelKind::BoundedCustom) {
    if (!std::holds_alternative<MarkovChainProcess>(process.kind))
      throw ConfigError("table kernels need a markov_chain process");
    return;
  }
  const std::size_t need = kernel.point_dimension();
  if (need != 0 && need != process_dimension(process))
    throw ConfigError("kernel needs points of dimension " + std::to_string(need));
}

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

}  // namespace

ExperimentResult run_simulate(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::Simulate;
  const std::size_t reps = std::max<std::size_t>(c.replications, 1);
  auto paths = nlohmann::json::array();
  for (std::size_t i = 0; i < c.lengths.size(); ++i) {
    const std::size_t T = c.lengths[i];
    for (std::size_t r = 0; r < reps; ++r) {
      const SeriesPath path = generate(*c.process, T, StreamKey{c.seed, r, i});
      std::ostringstream csv;
      write_path_csv(csv, path);
      const std::string name = "path_T" + std::to_string(T) + "_rep" + std::to_string(r) + ".csv";
      out.files.emplace_back(name, csv.str());
      std::vector<double> means(path.dim, 0.0);
      for (std::size_t t = 0; t < path.length; ++t)
        for (std::size_t d = 0; d < path.dim; ++d) means[d] += path.at(t, d) / static_cast<double>(path.length);
      paths.push_back({{"T", T}, {"replication", r}, {"file", name}, {"column_means", means}});
    }
  }
  out.result = {{"process", process_kind_name(*c.process)}, {"paths", paths}};
  return out;
}

ExperimentResult run_tail_experiment(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::Tail;
  const KernelSpec& kernel = *c.kernel;
  const ProcessSpec& process = *c.process;
  check_kernel_fits(kernel, process);
  const double M = kernel.bound();
  const std::size_t N = c.replications;
  nlohmann::json res;
  res["M"] = M;
  res["order"] = kernel.order();
  res["replications"] = N;
  res["process"] = process_kind_name(process);
  res["x_grid"] = c.tail.x_grid;

  if (N == 0) {
    res["dry_run"] = true;
    res["cells"] = nlohmann::json::array();
    out.result = std::move(res);
    return out;
  }

  // Reference value theta(h).
  double theta = 0.0;
  if (const auto* chain = chain_of(c)) {
    theta = theta_independent(*chain, kernel);
    res["theta"] = {{"value", theta}, {"source", "exact"}, {"std_error", 0.0}};
  } else if (c.tail.theta) {
    theta = *c.tail.theta;
    res["theta"] = {{"value", theta}, {"source", "config"}, {"std_error", 0.0}};
  } else {
    const auto mc = theta_independent_mc(process, kernel, c.tail.oracle_draws, StreamKey{c.seed, 0, kOracleStream});
    double step = 0.0;
    for (std::size_t i = 1; i < c.tail.x_grid.size(); ++i) {
      const double d = c.tail.x_grid[i] - c.tail.x_grid[i - 1];
      if (d > 0.0) step = step == 0.0 ? d : std::min(step, d);
    }
    if (step == 0.0) step = c.tail.x_grid.back();
    if (step > 0.0 && mc.std_error > 0.1 * step)
      throw ConfigError("theta oracle standard error " + std::to_string(mc.std_error) +
                        " exceeds 10% of the smallest x step");
    theta = mc.value;
    res["theta"] = {{"value", theta}, {"source", "oracle"}, {"std_error", mc.std_error}, {"draws", mc.draws}};
  }

  // Deviations |U - theta| per T, replication order.
  std::vector<std::vector<double>> dev(c.lengths.size(), std::vector<double>(N));
  for (std::size_t i = 0; i < c.lengths.size(); ++i) {
    const std::size_t T = c.lengths[i];
    parallel_for(N, c.threads, [&](std::size_t rep) {
      const SeriesPath path = generate(process, T, StreamKey{c.seed, rep, i});
      dev[i][rep] = std::abs(u_statistic_fast(path, kernel) - theta);
    });
  }

  struct Cell {
    std::size_t T;
    double x, threshold, empirical, stderr_, raw;
  };
  std::vector<Cell> cells;
  std::vector<double> lengths_d, rms;
  for (std::size_t i = 0; i < c.lengths.size(); ++i) {
    const double T = static_cast<double>(c.lengths[i]);
    const double threshold = theorem1_threshold(T, M, c.constants.c4);
    double ss = 0.0;
    for (double d : dev[i]) ss += d * d;
    lengths_d.push_back(T);
    rms.push_back(std::sqrt(ss / static_cast<double>(N)));
    for (double x : c.tail.x_grid) {
      std::size_t hits = 0, raw_hits = 0;
      for (double d : dev[i]) {
        hits += d >= threshold + x;
        raw_hits += d >= x;
      }
      const double p = static_cast<double>(hits) / static_cast<double>(N);
      cells.push_back({c.lengths[i], x, threshold, p, std::sqrt(p * (1.0 - p) / static_cast<double>(N)),
                       static_cast<double>(raw_hits) / static_cast<double>(N)});
    }
  }

  BoundConstants used = c.constants;
  if (!c.tail.calibrate_lengths.empty()) {
    std::vector<TailPoint> points, raw_points;
    for (const auto& cell : cells) {
      if (!contains(c.tail.calibrate_lengths, cell.T)) continue;
      points.push_back({cell.x, static_cast<double>(cell.T), M, cell.empirical});
      raw_points.push_back({cell.x, static_cast<double>(cell.T), M, cell.raw});
    }
    // c5 needs two lengths; c0 is fitted from a single one.
    if (c.tail.calibrate_lengths.size() >= 2) {
      const CalibrationResult cal = calibrate_constants(points, c.constants);
      used = cal.constants;
      res["calibration"] = to_json(cal);
    }
    used.c0 = calibrate_hoeffding_c0(raw_points);
    res["calibration"]["c0"] = used.c0;
    res["calibration"]["lengths"] = c.tail.calibrate_lengths;
  }
  res["constants_used"] = to_json(used);

  auto jcells = nlohmann::json::array();
  std::map<std::size_t, std::ostringstream> csv;
  std::size_t holdout_failures = 0;
  for (const auto& cell : cells) {
    const double T = static_cast<double>(cell.T);
    const double bound = theorem1_bound(cell.x, T, M, used.c5);
    const double hoeff = hoeffding_bound(cell.x, T, M, used.c0);
    const bool holdout = contains(c.tail.holdout_lengths, cell.T);
    const bool dominated = cell.empirical - 3.0 * cell.stderr_ <= bound;
    if (holdout && !dominated) ++holdout_failures;
    nlohmann::json j{{"T", cell.T},
                     {"x", cell.x},
                     {"threshold", cell.threshold},
                     {"empirical", cell.empirical},
                     {"stderr", cell.stderr_},
                     {"bound", bound},
                     {"raw_tail", cell.raw},
                     {"hoeffding_bound", hoeff},
                     {"small_T", cell.T < c.tail.small_length}};
    if (holdout) j["holdout_dominated"] = dominated;
    jcells.push_back(std::move(j));
    auto& s = csv[cell.T];
    if (s.tellp() == 0) s << "x,empirical,stderr,bound\n" << std::setprecision(17);
    s << cell.x << ',' << cell.empirical << ',' << cell.stderr_ << ',' << bound << '\n';
  }
  res["cells"] = std::move(jcells);
  auto jr = nlohmann::json::array();
  for (std::size_t i = 0; i < c.lengths.size(); ++i) jr.push_back({{"T", c.lengths[i]}, {"rms", rms[i]}});
  res["rms"] = std::move(jr);
  res["rms_slope"] = optional_json(loglog_slope(lengths_d, rms));
  if (!c.tail.holdout_lengths.empty()) {
    res["holdout"] = {{"lengths", c.tail.holdout_lengths}, {"failures", holdout_failures}};
    if (holdout_failures > 0)
      out.failures.push_back(std::to_string(holdout_failures) + " held-out tail cells exceed the calibrated bound");
  }
  for (std::size_t T : c.lengths) out.files.emplace_back("tail_T" + std::to_string(T) + ".csv", csv[T].str());
  out.result = std::move(res);
  return out;
}

ExperimentResult run_scaling(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::Scaling;
  if (c.replications == 0) {
    out.result = {{"dry_run", true}, {"cells", nlohmann::json::array()}};
    return out;
  }
  ScalingSpec spec;
  const nlohmann::json family = c.process_json;
  spec.family = [family](std::size_t p) { return process_at_dimension(family, p); };
  spec.kind = c.scaling.estimator;
  spec.lengths = c.lengths;
  spec.dimensions = c.scaling.dimensions;
  spec.replications = c.replications;
  spec.seed = c.seed;
  spec.threads = c.threads;
  spec.oracle_samples = c.scaling.oracle_samples;
  const ScalingReport report = scaling_experiment(spec);
  out.result = to_json(report);
  std::ostringstream csv;
  write_scaling_csv(csv, report);
  out.files.emplace_back("scaling.csv", csv.str());
  return out;
}

ExperimentResult run_bias_curve(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::BiasCurve;
  const FiniteMarkovChain& chain = *chain_of(c);
  const KernelSpec& kernel = *c.kernel;
  const double M = kernel.bound();
  const std::size_t max_t = *std::max_element(c.lengths.begin(), c.lengths.end());
  const ConditionalExpectationOracle oracle(chain, kernel, static_cast<int>(std::max<std::size_t>(max_t, 2) - 1));
  const double theta = theta_independent(chain, kernel);

  std::vector<double> lengths, scaled;
  auto points = nlohmann::json::array();
  double fitted_c = 0.0;
  for (std::size_t T : c.lengths) {
    const double ts = theta_star(oracle, static_cast<int>(T));
    const double bias = std::abs(ts - theta);
    const double s = std::sqrt(static_cast<double>(T)) * bias;
    lengths.push_back(static_cast<double>(T));
    scaled.push_back(s);
    fitted_c = std::max(fitted_c, s / M);
    points.push_back({{"T", T}, {"theta_star", ts}, {"bias", bias}, {"sqrt_T_bias", s}});
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    points[i]["bias_bound"] = bias_bound(lengths[i], M, fitted_c);
  std::optional<double> slope;
  const bool all_positive = std::all_of(scaled.begin(), scaled.end(), [](double v) { return v > 0.0; });
  if (c.lengths.size() >= 2 && all_positive) slope = loglog_slope(lengths, scaled);
  out.result = {{"theta", theta}, {"M", M},           {"points", points},
                {"fitted_c", fitted_c}, {"sqrt_T_bias_slope", optional_json(slope)}};
  return out;
}

ExperimentResult run_decompose_check(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::DecomposeCheck;
  const FiniteMarkovChain& chain = *chain_of(c);
  const KernelSpec& kernel = *c.kernel;
  const std::size_t N = c.replications;
  auto per_t = nlohmann::json::array();
  double worst_residual = 0.0, worst_ratio = 0.0, worst_p1 = 0.0;
  for (std::size_t i = 0; i < c.lengths.size(); ++i) {
    const std::size_t T = c.lengths[i];
    std::vector<DecompositionReport> reports(N);
    parallel_for(N, c.threads, [&](std::size_t rep) {
      const SeriesPath path = generate(*c.process, T, StreamKey{c.seed, rep, i});
      reports[rep] = decompose(path, chain, kernel);
    });
    double residual = 0.0, ratio = 0.0, p1 = 0.0;
    for (const auto& r : reports) {
      residual = std::max(residual, std::abs(r.residual) / std::max(1.0, std::abs(r.u_value)));
      ratio = std::max(ratio, r.b_term_max_abs / (2.0 * kernel.bound()));
      p1 = std::max(p1, r.p1_max_abs);
    }
    per_t.push_back({{"T", T}, {"max_residual", residual}, {"max_b_ratio", ratio}, {"max_p1", p1}});
    worst_residual = std::max(worst_residual, residual);
    worst_ratio = std::max(worst_ratio, ratio);
    worst_p1 = std::max(worst_p1, p1);
  }
  const bool telescoping = worst_residual <= 1e-10;
  const bool p2 = worst_ratio <= 1.0 + 1e-12;
  const bool p1 = worst_p1 <= 1e-10;
  if (!telescoping) out.failures.push_back("telescoping residual above 1e-10");
  if (!p2) out.failures.push_back("a B-term exceeds 2M");
  if (!p1) out.failures.push_back("a B-term conditional mean is non-zero");
  out.result = {{"order", kernel.order()},
                {"replications", N},
                {"lengths", per_t},
                {"max_residual", worst_residual},
                {"max_b_ratio", worst_ratio},
                {"max_p1", worst_p1},
                {"checks", {{"telescoping", telescoping}, {"p1", p1}, {"p2", p2}}}};
  if (N == 0) out.result["dry_run"] = true;
  return out;
}

ExperimentResult run_mixing_profile(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::MixingProfile;
  const FiniteMarkovChain& chain = *chain_of(c);
  const auto& m = c.mixing;
  const bool conditional = m.kind == MixingKind::ConditionalPhi || m.kind == MixingKind::ConditionalAlpha;
  const MixingProfile profile = conditional ? conditional_profile(chain, m.kind, m.conditioning, m.gap_grid, m.lags)
                                            : mixing_profile(chain, m.kind, m.lags);
  out.result = {{"profile", to_json(profile)}};
  if (chain.state_count() <= kMaxAlphaStates) {
    auto ordering = nlohmann::json::array();
    for (int n : m.lags) {
      const double a = alpha_coeff(chain, n), b = beta_coeff(chain, n), f = phi_coeff(chain, n);
      const bool ok = a <= b + 1e-12 && b <= f + 1e-12;
      if (!ok) out.failures.push_back("alpha <= beta <= phi fails at lag " + std::to_string(n));
      ordering.push_back({{"lag", n}, {"alpha", a}, {"beta", b}, {"phi", f}, {"ordered", ok}});
    }
    out.result["ordering"] = std::move(ordering);
  }
  std::ostringstream csv;
  write_profile_csv(csv, profile);
  out.files.emplace_back("profile.csv", csv.str());
  return out;
}

ExperimentResult run_mgf_check(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::MgfCheck;
  auto sums = nlohmann::json::array();
  for (std::size_t idx = 0; idx < c.mgf.summands.size(); ++idx) {
    const int n = c.mgf.summands[idx];
    // Summand i: uniform, Rademacher or skewed two-point, scaled by b_i.
    std::vector<BernsteinParams> params;
    for (int i = 0; i < n; ++i) {
      const double b = 0.5 + 0.25 * (i % 5);
      double var = 0.0;
      switch (i % 3) {
        case 0: var = b * b / 3.0; break;
        case 1: var = b * b; break;
        default: var = 0.25 * b * b; break;  // P(b) = 0.2, P(-b/4) = 0.8
      }
      // Bernstein: log E e^{eta Z} <= var eta^2 / (2 (1 - b eta / 3)).
      params.push_back({std::sqrt(var / 2.0), b / 3.0});
    }
    const BernsteinParams total = combine_bernstein_params(params);
    std::vector<double> samples(c.mgf.draws);
    CounterRng rng(StreamKey{c.seed, idx, 0});
    for (double& s : samples) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double b = 0.5 + 0.25 * (i % 5);
        const double u = rng.uniform();
        switch (i % 3) {
          case 0: sum += b * (2.0 * u - 1.0); break;
          case 1: sum += u < 0.5 ? b : -b; break;
          default: sum += u < 0.2 ? b : -0.25 * b; break;
        }
      }
      s = sum;
    }
    double worst = 0.0;
    std::size_t violations = 0;
    auto grid = nlohmann::json::array();
    for (int k = 1; k <= c.mgf.eta_points; ++k) {
      const double eta = static_cast<double>(k) / (c.mgf.eta_points + 1) / total.kappa;
      const double emp = empirical_log_mgf(samples, eta);
      const double env = bernstein_envelope(total, eta);
      worst = std::max(worst, emp / env);
      violations += emp > env;
      grid.push_back({{"eta", eta}, {"empirical", emp}, {"envelope", env}});
    }
    if (violations > 0)
      out.failures.push_back("envelope below the empirical log-MGF at " + std::to_string(violations) +
                             " grid points for n = " + std::to_string(n));
    sums.push_back({{"summands", n},
                    {"sigma", total.sigma},
                    {"kappa", total.kappa},
                    {"max_ratio", worst},
                    {"violations", violations},
                    {"grid", grid}});
  }
  out.result = {{"draws", c.mgf.draws}, {"sums", sums}};
  return out;
}

ExperimentResult run_calibrate(const ExperimentConfig& c) {
  ExperimentResult out;
  out.kind = ExperimentKind::Calibrate;
  std::vector<TailPoint> points = c.calibrate.points;
  if (c.calibrate.tail_result) {
    std::ifstream in(*c.calibrate.tail_result);
    if (!in) throw ConfigError("cannot open " + c.calibrate.tail_result->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
      const auto& res = doc.at("result");
      const double M = res.at("M").get<double>();
      for (const auto& cell : res.at("cells"))
        points.push_back({cell.at("x").get<double>(), cell.at("T").get<double>(), M, cell.at("empirical").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad tail result " + c.calibrate.tail_result->string() + ": " + e.what());
    }
  }
  CalibrationResult cal;
  try {
    cal = calibrate_constants(points, c.constants);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out.result = {{"points", points.size()}, {"calibration", to_json(cal)}};
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  check_budget(config);
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult out;
  switch (config.kind) {
    case ExperimentKind::Simulate: out = run_simulate(config); break;
    case ExperimentKind::Tail: out = run_tail_experiment(config); break;
    case ExperimentKind::Scaling: out = run_scaling(config); break;
    case ExperimentKind::BiasCurve: out = run_bias_curve(config); break;
    case ExperimentKind::DecomposeCheck: out = run_decompose_check(config); break;
    case ExperimentKind::MixingProfile: out = run_mixing_profile(config); break;
    case ExperimentKind::MgfCheck: out = run_mgf_check(config); break;
    case ExperimentKind::Calibrate: out = run_calibrate(config); break;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  out.metadata = {{"wall_clock_seconds", elapsed.count()}, {"threads", resolve_threads(config.threads)}};
  return out;
}

}  // namespace mixstat::harness
