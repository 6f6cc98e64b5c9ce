#include "mixstat/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace mixstat {
namespace {

void require_nonneg_x(double x) {
  if (!(x >= 0.0)) throw std::domain_error("x must be non-negative");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

void require_t2(double T) {
  if (!(T >= 2.0)) throw std::domain_error("T must be >= 2");
}

}  // namespace

void BoundConstants::validate() const {
  for (double c : {c0, c1, c2, c3, c4, c5, c6, c7, gamma}) require_positive(c, "bound constant");
  if (r < 1) throw std::domain_error("r must be >= 1");
}

double log_factor(double T) {
  require_t2(T);
  return std::log(T) * std::log(std::log(4.0 * T));
}

double hoeffding_bound(double x, double T, double M, double c0) {
  require_nonneg_x(x);
  if (!(T >= 1.0)) throw std::domain_error("T must be >= 1");
  require_positive(M, "M");
  return 2.0 * std::exp(-c0 * T * x * x / (M * M + M * x));
}

double merlevede_eta_limit(double T, double M, double c1) {
  require_positive(M, "M");
  require_positive(c1, "c1");
  return 1.0 / (c1 * M * log_factor(T));
}

double merlevede_logmgf_bound(double eta, double T, double M, double c1, double c2) {
  const double limit = merlevede_eta_limit(T, M, c1);
  if (!(eta > 0.0) || !(eta < limit)) throw std::domain_error("eta outside the admissible interval");
  return c2 * eta * eta * T * M * M / (1.0 - eta / limit);
}

double merlevede_tail_bound(double x, double T, double M, double c3) {
  require_nonneg_x(x);
  require_positive(M, "M");
  return 2.0 * std::exp(-c3 * x * x / (T * M * M + M * x * log_factor(T)));
}

double theorem1_bound(double x, double T, double M, double c5) {
  require_nonneg_x(x);
  require_positive(M, "M");
  return 2.0 * std::exp(-c5 * x * x * T / (M * M + M * x * log_factor(T)));
}

double theorem1_threshold(double T, double M, double c4) {
  require_t2(T);
  return c4 * M / std::sqrt(T);
}

double theorem2_eta_limit(double T, double M, double c6) {
  require_positive(M, "M");
  require_positive(c6, "c6");
  return T / (c6 * M * log_factor(T));
}

double theorem2_logmgf_bound(double eta, double T, double M, double c6, double c7) {
  const double limit = theorem2_eta_limit(T, M, c6);
  if (!(eta > 0.0) || !(eta < limit)) throw std::domain_error("eta outside the admissible interval");
  return c7 * eta * eta * M * M / T / (1.0 - eta / limit);
}

double bias_bound(double T, double M, double c) {
  if (!(T >= 1.0)) throw std::domain_error("T must be >= 1");
  return c * M / std::sqrt(T);
}

BernsteinParams combine_bernstein_params(std::span<const BernsteinParams> params) {
  if (params.empty()) throw std::invalid_argument("need at least one parameter pair");
  BernsteinParams out;
  for (const auto& p : params) {
    if (p.sigma < 0.0 || p.kappa < 0.0) throw std::domain_error("sigma and kappa must be non-negative");
    out.sigma += p.sigma;
    out.kappa += p.kappa;
  }
  return out;
}

double bernstein_envelope(const BernsteinParams& p, double eta) {
  const double denom = 1.0 - p.kappa * eta;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return (p.sigma * eta) * (p.sigma * eta) / denom;
}

double empirical_log_mgf(std::span<const double> samples, double eta) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  double peak = -std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  for (double v : samples) {
    peak = std::max(peak, eta * v);
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (std::abs(eta) * max_abs > 700.0) throw std::overflow_error("eta * max|sample| exceeds 700");
  double acc = 0.0;
  for (double v : samples) acc += std::exp(eta * v - peak);
  return peak + std::log(acc / static_cast<double>(samples.size()));
}

CalibrationResult calibrate_constants(std::span<const TailPoint> points, BoundConstants base, double c5_cap) {
  if (points.size() < 5) throw std::invalid_argument("calibration needs at least 5 points");
  std::set<double> lengths;
  for (const auto& p : points) lengths.insert(p.T);
  if (lengths.size() < 2) throw std::invalid_argument("calibration needs at least 2 distinct T");

  CalibrationResult out;
  out.c5 = c5_cap;
  out.capped = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    require_nonneg_x(p.x);
    require_positive(p.M, "M");
    if (p.tail < 0.0 || p.tail > 1.0) throw std::domain_error("tail probability outside [0, 1]");
    if (p.tail == 0.0 || p.x == 0.0) continue;
    const double q = p.x * p.x * p.T / (p.M * p.M + p.M * p.x * log_factor(p.T));
    const double c = std::log(2.0 / p.tail) / q;
    if (c < out.c5) {
      out.c5 = c;
      out.capped = false;
      out.binding_index = i;
    }
  }
  out.constants = base;
  out.constants.c5 = out.c5;
  if (out.binding_index) {
    const auto& p = points[*out.binding_index];
    out.slack = theorem1_bound(p.x, p.T, p.M, out.c5) - p.tail;
  }
  return out;
}

double calibrate_hoeffding_c0(std::span<const TailPoint> points, double cap) {
  double c0 = cap;
  for (const auto& p : points) {
    require_nonneg_x(p.x);
    require_positive(p.M, "M");
    if (p.tail <= 0.0 || p.x == 0.0) continue;
    const double q = p.T * p.x * p.x / (p.M * p.M + p.M * p.x);
    c0 = std::min(c0, std::log(2.0 / p.tail) / q);
  }
  return c0;
}

nlohmann::json to_json(const BoundConstants& c) {
  return nlohmann::json{{"c0", c.c0}, {"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4},
                        {"c5", c.c5}, {"c6", c.c6}, {"c7", c.c7}, {"gamma", c.gamma}, {"r", c.r}};
}

BoundConstants bound_constants_from_json(const nlohmann::json& j, BoundConstants c) {
  if (!j.is_object()) throw std::invalid_argument("constants must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "c0") c.c0 = value.get<double>();
    else if (key == "c1") c.c1 = value.get<double>();
    else if (key == "c2") c.c2 = value.get<double>();
    else if (key == "c3") c.c3 = value.get<double>();
    else if (key == "c4") c.c4 = value.get<double>();
    else if (key == "c5") c.c5 = value.get<double>();
    else if (key == "c6") c.c6 = value.get<double>();
    else if (key == "c7") c.c7 = value.get<double>();
    else if (key == "gamma") c.gamma = value.get<double>();
    else if (key == "r") c.r = value.get<int>();
    else throw std::invalid_argument("unknown constants field: " + key);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const CalibrationResult& c) {
  nlohmann::json j{{"constants", to_json(c.constants)}, {"c5", c.c5}, {"capped", c.capped}, {"slack", c.slack}};
  j["binding_index"] = c.binding_index ? nlohmann::json(*c.binding_index) : nlohmann::json(nullptr);
  return j;
}

}  // namespace mixstat
