#pragma once

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mixstat {

// log E exp(eta Z) <= (sigma eta)^2 / (1 - kappa eta) for 0 < eta < 1 / kappa.
struct BernsteinParams {
  double sigma = 0.0;
  double kappa = 0.0;
};

// Free absolute constants of the tail bounds; the defaults are placeholders.
struct BoundConstants {
  double c0 = 1.0, c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0, c5 = 1.0, c6 = 1.0, c7 = 1.0;
  double gamma = 1.0;
  int r = 2;

  void validate() const;
};

// log(T) * log(log(4T)), natural logs; T >= 2.
double log_factor(double T);

// 2 exp(-c0 T x^2 / (M^2 + M x))
double hoeffding_bound(double x, double T, double M, double c0);

// c2 eta^2 T M^2 / (1 - c1 eta M L(T)); requires 0 < eta < 1 / (c1 M L(T)).
double merlevede_logmgf_bound(double eta, double T, double M, double c1, double c2);
double merlevede_eta_limit(double T, double M, double c1);
// 2 exp(-c3 x^2 / (T M^2 + M x L(T)))
double merlevede_tail_bound(double x, double T, double M, double c3);

// 2 exp(-c5 x^2 T / (M^2 + M x L(T)))
double theorem1_bound(double x, double T, double M, double c5);
// c4 M / sqrt(T)
double theorem1_threshold(double T, double M, double c4);

// c7 eta^2 M^2 T^-1 / (1 - c6 eta M T^-1 L(T)); requires eta below the pole.
double theorem2_logmgf_bound(double eta, double T, double M, double c6, double c7);
double theorem2_eta_limit(double T, double M, double c6);

// c M / sqrt(T)
double bias_bound(double T, double M, double c);

BernsteinParams combine_bernstein_params(std::span<const BernsteinParams> params);
// (sigma eta)^2 / (1 - kappa eta); infinity at or past the pole.
double bernstein_envelope(const BernsteinParams& p, double eta);

// log mean exp(eta s_i); requires eta * max|s_i| <= 700.
double empirical_log_mgf(std::span<const double> samples, double eta);

struct TailPoint {
  double x = 0.0;  // excess over the threshold
  double T = 0.0;
  double M = 1.0;
  double tail = 0.0;  // empirical P(|U - theta| >= threshold + x)
};

struct CalibrationResult {
  BoundConstants constants;
  double c5 = 0.0;
  bool capped = false;  // no point constrained c5; the cap was returned
  std::optional<std::size_t> binding_index;
  double slack = 0.0;  // bound minus empirical tail at the binding point
};

// Largest c5 for which theorem1_bound dominates every point: the minimum of
// log(2 / tail) / (x^2 T / (M^2 + M x L(T))) over points with tail > 0, x > 0.
// Needs >= 5 points over >= 2 distinct T.
CalibrationResult calibrate_constants(std::span<const TailPoint> points, BoundConstants base = {},
                                      double c5_cap = 1e6);

// Largest c0 for which hoeffding_bound dominates every point; here `tail` is
// P(|U - theta| >= x) with no threshold. Returns `cap` when nothing binds.
double calibrate_hoeffding_c0(std::span<const TailPoint> points, double cap = 1e6);

nlohmann::json to_json(const BoundConstants& c);
BoundConstants bound_constants_from_json(const nlohmann::json& j, BoundConstants defaults = {});
nlohmann::json to_json(const CalibrationResult& c);

}  // namespace mixstat
