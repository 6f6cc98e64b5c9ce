#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mixstat {

// One observation X_t; its length is the data dimension.
using Point = std::span<const double>;

enum class KernelKind {
  Mean,           // r = 1, h(x) = x
  SignProduct,    // r = 2, Kendall's tau kernel
  SpearmanSym,    // r = 3, symmetrized Spearman rho_3 kernel
  BoundedCustom,  // table over a finite state alphabet
  Symmetrized,    // r!-average of a user supplied asymmetric kernel
};

std::string_view to_string(KernelKind kind);

// sign(0) = 0, matching the 0/0 = 0 convention for ties.
constexpr int sign(double v) noexcept { return (v > 0.0) - (v < 0.0); }

using AsymmetricKernel = std::function<double(std::span<const Point>)>;

// A symmetric kernel h of order r with |h| <= M.
class KernelSpec {
 public:
  static KernelSpec mean(double bound);
  static KernelSpec sign_product();
  static KernelSpec spearman_sym();

  // Table-driven kernel over states {0..states-1}. `value` is queried once per
  // sorted tuple, so the result is symmetric by construction. If `bound` is
  // omitted it is the largest absolute table entry (or 1 for the zero table).
  static KernelSpec bounded_custom(int states, int order,
                                   const std::function<double(std::span<const int>)>& value,
                                   std::optional<double> bound = std::nullopt);

  // Same, from explicit (tuple, value) entries. Tuples are canonicalized by
  // sorting; two orderings of one multiset with different values is an error.
  static KernelSpec from_entries(int states, int order,
                                 const std::vector<std::pair<std::vector<int>, double>>& entries,
                                 double default_value = 0.0,
                                 std::optional<double> bound = std::nullopt);

  KernelKind kind() const noexcept { return kind_; }
  int order() const noexcept { return order_; }
  double bound() const noexcept { return bound_; }
  bool symmetric() const noexcept { return true; }

  // Required length of every point, or 0 when any length is accepted.
  std::size_t point_dimension() const noexcept;

  // Validates arity and point dimension, then evaluates.
  double operator()(std::span<const Point> points) const;

  // Skips arity checks; used by the enumeration loops.
  double evaluate(std::span<const Point> points) const;

  // BoundedCustom only.
  int state_count() const noexcept { return states_; }
  double eval_states(std::span<const int> states) const;

 private:
  KernelSpec(KernelKind kind, int order, double bound) : kind_(kind), order_(order), bound_(bound) {}

  std::size_t table_index(std::span<const int> sorted) const;

  KernelKind kind_;
  int order_;
  double bound_;
  int states_ = 0;
  std::shared_ptr<const std::vector<double>> table_;
  std::shared_ptr<const AsymmetricKernel> base_;

  friend KernelSpec symmetrize(AsymmetricKernel asym_kernel, int order, double bound);
};

double eval_kernel(const KernelSpec& spec, std::span<const Point> points);
double eval_kernel(const KernelSpec& spec, const std::vector<std::vector<double>>& points);

// Average of `asym_kernel` over all r! argument orderings.
KernelSpec symmetrize(AsymmetricKernel asym_kernel, int order, double bound);
KernelSpec symmetrize(const KernelSpec& kernel);

// Names accepted in config files: mean, sign_product, spearman_sym.
KernelSpec kernel_from_name(std::string_view name, double bound = 1.0);

// Structured text format for BoundedCustom tables:
//   {"states": s, "order": r, "bound": M?, "default": v?,
//    "entries": [{"tuple": [i, j, ...], "value": v}, ...]}
KernelSpec kernel_table_from_json(const nlohmann::json& j);
nlohmann::json kernel_table_to_json(const KernelSpec& kernel);
KernelSpec load_kernel_table(const std::filesystem::path& path);

}  // namespace mixstat
