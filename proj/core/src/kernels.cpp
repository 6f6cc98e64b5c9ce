#include "mixstat/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mixstat {
namespace {

constexpr std::size_t kMaxTableSize = std::size_t{1} << 24;

std::size_t checked_pow(int base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) {
    out *= static_cast<std::size_t>(base);
    if (out > kMaxTableSize) throw std::invalid_argument("kernel table too large");
  }
  return out;
}

int state_of(const Point& p, int states) {
  if (p.size() != 1) throw std::invalid_argument("state kernel expects one-dimensional points");
  const double v = p[0];
  const double r = std::nearbyint(v);
  if (r != v || r < 0 || r >= states) throw std::invalid_argument("point is not a valid state index");
  return static_cast<int>(r);
}

// Base Spearman term sign(a1 - b1) * sign(a2 - c2).
inline int spearman_term(const Point& a, const Point& b, const Point& c) {
  return sign(a[0] - b[0]) * sign(a[1] - c[1]);
}

}  // namespace

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Mean: return "mean";
    case KernelKind::SignProduct: return "sign_product";
    case KernelKind::SpearmanSym: return "spearman_sym";
    case KernelKind::BoundedCustom: return "bounded_custom";
    case KernelKind::Symmetrized: return "symmetrized";
  }
  return "unknown";
}

KernelSpec KernelSpec::mean(double bound) {
  if (!(bound > 0)) throw std::invalid_argument("kernel bound must be positive");
  return KernelSpec(KernelKind::Mean, 1, bound);
}

KernelSpec KernelSpec::sign_product() { return KernelSpec(KernelKind::SignProduct, 2, 1.0); }

KernelSpec KernelSpec::spearman_sym() { return KernelSpec(KernelKind::SpearmanSym, 3, 1.0); }

KernelSpec KernelSpec::bounded_custom(int states, int order,
                                      const std::function<double(std::span<const int>)>& value,
                                      std::optional<double> bound) {
  if (states < 1) throw std::invalid_argument("state count must be positive");
  if (order < 1) throw std::invalid_argument("kernel order must be >= 1");
  const std::size_t size = checked_pow(states, order);
  auto table = std::make_shared<std::vector<double>>(size, 0.0);
  std::vector<int> tuple(static_cast<std::size_t>(order), 0);
  double max_abs = 0.0;
  // Visit non-decreasing tuples only.
  for (;;) {
    const double v = value(tuple);
    if (!std::isfinite(v)) throw std::invalid_argument("kernel table value is not finite");
    std::size_t idx = 0;
    for (int s : tuple) idx = idx * static_cast<std::size_t>(states) + static_cast<std::size_t>(s);
    (*table)[idx] = v;
    max_abs = std::max(max_abs, std::abs(v));
    int pos = order - 1;
    while (pos >= 0 && tuple[static_cast<std::size_t>(pos)] == states - 1) --pos;
    if (pos < 0) break;
    const int next = tuple[static_cast<std::size_t>(pos)] + 1;
    for (int q = pos; q < order; ++q) tuple[static_cast<std::size_t>(q)] = next;
  }
  const double m = bound.value_or(max_abs > 0 ? max_abs : 1.0);
  if (!(m > 0)) throw std::invalid_argument("kernel bound must be positive");
  if (max_abs > m) throw std::invalid_argument("kernel table exceeds its declared bound");
  KernelSpec out(KernelKind::BoundedCustom, order, m);
  out.states_ = states;
  out.table_ = std::move(table);
  return out;
}

KernelSpec KernelSpec::from_entries(int states, int order,
                                    const std::vector<std::pair<std::vector<int>, double>>& entries,
                                    double default_value, std::optional<double> bound) {
  if (states < 1 || order < 1) throw std::invalid_argument("invalid kernel table shape");
  const std::size_t size = checked_pow(states, order);
  std::vector<double> canon(size, default_value);
  std::vector<bool> seen(size, false);
  for (const auto& [tuple, v] : entries) {
    if (tuple.size() != static_cast<std::size_t>(order))
      throw std::invalid_argument("kernel table tuple has wrong arity");
    std::vector<int> sorted = tuple;
    std::sort(sorted.begin(), sorted.end());
    std::size_t idx = 0;
    for (int s : sorted) {
      if (s < 0 || s >= states) throw std::invalid_argument("kernel table state out of range");
      idx = idx * static_cast<std::size_t>(states) + static_cast<std::size_t>(s);
    }
    if (seen[idx] && canon[idx] != v)
      throw std::invalid_argument("kernel table is not symmetric: conflicting permuted entries");
    seen[idx] = true;
    canon[idx] = v;
  }
  return bounded_custom(
      states, order,
      [&](std::span<const int> sorted) {
        std::size_t idx = 0;
        for (int s : sorted) idx = idx * static_cast<std::size_t>(states) + static_cast<std::size_t>(s);
        return canon[idx];
      },
      bound);
}

std::size_t KernelSpec::point_dimension() const noexcept {
  switch (kind_) {
    case KernelKind::Mean:
    case KernelKind::BoundedCustom: return 1;
    case KernelKind::SignProduct:
    case KernelKind::SpearmanSym: return 2;
    case KernelKind::Symmetrized: return 0;
  }
  return 0;
}

std::size_t KernelSpec::table_index(std::span<const int> sorted) const {
  std::size_t idx = 0;
  for (int s : sorted) idx = idx * static_cast<std::size_t>(states_) + static_cast<std::size_t>(s);
  return idx;
}

double KernelSpec::eval_states(std::span<const int> states) const {
  if (kind_ != KernelKind::BoundedCustom) throw std::logic_error("eval_states needs a BoundedCustom kernel");
  if (states.size() != static_cast<std::size_t>(order_)) throw std::invalid_argument("kernel arity mismatch");
  std::array<int, 8> small{};
  std::vector<int> large;
  std::span<int> buf;
  if (states.size() <= small.size()) {
    buf = std::span<int>(small.data(), states.size());
  } else {
    large.resize(states.size());
    buf = large;
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] < 0 || states[i] >= states_) throw std::invalid_argument("state index out of range");
    buf[i] = states[i];
  }
  std::sort(buf.begin(), buf.end());
  return (*table_)[table_index(buf)];
}

double KernelSpec::evaluate(std::span<const Point> p) const {
  switch (kind_) {
    case KernelKind::Mean: {
      const double v = p[0][0];
      if (std::abs(v) > bound_) throw std::domain_error("mean kernel argument exceeds its bound");
      return v;
    }
    case KernelKind::SignProduct:
      return static_cast<double>(sign(p[0][0] - p[1][0]) * sign(p[0][1] - p[1][1]));
    case KernelKind::SpearmanSym: {
      // All six orderings of the base term; their sum lies in [-2, 2], so half of
      // it (three times the average) is bounded by 1.
      const int sum = spearman_term(p[0], p[1], p[2]) + spearman_term(p[0], p[2], p[1]) +
                      spearman_term(p[1], p[0], p[2]) + spearman_term(p[1], p[2], p[0]) +
                      spearman_term(p[2], p[0], p[1]) + spearman_term(p[2], p[1], p[0]);
      return 0.5 * static_cast<double>(sum);
    }
    case KernelKind::BoundedCustom: {
      std::array<int, 8> small{};
      std::vector<int> large;
      std::span<int> buf;
      if (p.size() <= small.size()) {
        buf = std::span<int>(small.data(), p.size());
      } else {
        large.resize(p.size());
        buf = large;
      }
      for (std::size_t i = 0; i < p.size(); ++i) buf[i] = state_of(p[i], states_);
      std::sort(buf.begin(), buf.end());
      return (*table_)[table_index(buf)];
    }
    case KernelKind::Symmetrized: {
      const std::size_t r = p.size();
      std::vector<std::size_t> perm(r);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::vector<Point> args(r);
      std::vector<double> values;
      do {
        for (std::size_t i = 0; i < r; ++i) args[i] = p[perm[i]];
        const double v = (*base_)(args);
        if (!(std::abs(v) <= bound_)) throw std::domain_error("asymmetric kernel exceeds its declared bound");
        values.push_back(v);
      } while (std::next_permutation(perm.begin(), perm.end()));
      // Summing in sorted order makes the result exactly invariant to argument order.
      std::sort(values.begin(), values.end());
      double total = 0.0;
      for (double v : values) total += v;
      return total / static_cast<double>(values.size());
    }
  }
  return 0.0;
}

double KernelSpec::operator()(std::span<const Point> points) const {
  if (points.size() != static_cast<std::size_t>(order_)) throw std::invalid_argument("kernel arity mismatch");
  const std::size_t dim = point_dimension();
  if (dim != 0) {
    for (const auto& p : points)
      if (p.size() != dim) throw std::invalid_argument("kernel point dimensionality mismatch");
  }
  return evaluate(points);
}

double eval_kernel(const KernelSpec& spec, std::span<const Point> points) { return spec(points); }

double eval_kernel(const KernelSpec& spec, const std::vector<std::vector<double>>& points) {
  std::vector<Point> views(points.begin(), points.end());
  return spec(views);
}

KernelSpec symmetrize(AsymmetricKernel asym_kernel, int order, double bound) {
  if (order < 1) throw std::invalid_argument("kernel order must be >= 1");
  if (order > 8) throw std::invalid_argument("symmetrization limited to order <= 8");
  if (!(bound > 0)) throw std::invalid_argument("kernel bound must be positive");
  KernelSpec out(KernelKind::Symmetrized, order, bound);
  out.base_ = std::make_shared<const AsymmetricKernel>(std::move(asym_kernel));
  return out;
}

KernelSpec symmetrize(const KernelSpec& kernel) {
  return symmetrize([kernel](std::span<const Point> p) { return kernel.evaluate(p); }, kernel.order(),
                    kernel.bound());
}

KernelSpec kernel_from_name(std::string_view name, double bound) {
  if (name == "mean") return KernelSpec::mean(bound);
  if (name == "sign_product" || name == "kendall") return KernelSpec::sign_product();
  if (name == "spearman_sym" || name == "spearman") return KernelSpec::spearman_sym();
  throw std::invalid_argument("unknown kernel name: " + std::string(name));
}

KernelSpec kernel_table_from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    if (key != "states" && key != "order" && key != "bound" && key != "default" && key != "entries" &&
        key != "kind")
      throw std::invalid_argument("unknown field in kernel table: " + key);
  }
  const int states = j.at("states").get<int>();
  const int order = j.at("order").get<int>();
  std::optional<double> bound;
  if (j.contains("bound")) bound = j.at("bound").get<double>();
  const double def = j.value("default", 0.0);
  std::vector<std::pair<std::vector<int>, double>> entries;
  for (const auto& e : j.at("entries")) {
    entries.emplace_back(e.at("tuple").get<std::vector<int>>(), e.at("value").get<double>());
  }
  return KernelSpec::from_entries(states, order, entries, def, bound);
}

nlohmann::json kernel_table_to_json(const KernelSpec& kernel) {
  if (kernel.kind() != KernelKind::BoundedCustom) throw std::invalid_argument("only table kernels serialize");
  nlohmann::json j;
  j["kind"] = "bounded_custom";
  j["states"] = kernel.state_count();
  j["order"] = kernel.order();
  j["bound"] = kernel.bound();
  auto entries = nlohmann::json::array();
  const int s = kernel.state_count();
  std::vector<int> tuple(static_cast<std::size_t>(kernel.order()), 0);
  for (;;) {
    entries.push_back({{"tuple", tuple}, {"value", kernel.eval_states(tuple)}});
    int pos = kernel.order() - 1;
    while (pos >= 0 && tuple[static_cast<std::size_t>(pos)] == s - 1) --pos;
    if (pos < 0) break;
    const int next = tuple[static_cast<std::size_t>(pos)] + 1;
    for (int q = pos; q < kernel.order(); ++q) tuple[static_cast<std::size_t>(q)] = next;
  }
  j["entries"] = std::move(entries);
  return j;
}

KernelSpec load_kernel_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open kernel table: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed kernel table " + path.string() + ": " + e.what());
  }
  return kernel_table_from_json(j);
}

}  // namespace mixstat
