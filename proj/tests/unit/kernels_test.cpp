#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mixstat/kernels.hpp"
#include "test_support.hpp"

using mixstat::KernelSpec;
using mixstat::Point;

namespace {

double eval(const KernelSpec& k, const std::vector<std::vector<double>>& pts) { return mixstat::eval_kernel(k, pts); }

// Average of sign(x_a - x_b) sign(y_a - y_c) over the 6 orderings (a, b, c).
double spearman_six_term_sum(const std::vector<std::vector<double>>& p) {
  std::vector<int> idx{0, 1, 2};
  double total = 0.0;
  do {
    const auto& a = p[static_cast<std::size_t>(idx[0])];
    const auto& b = p[static_cast<std::size_t>(idx[1])];
    const auto& c = p[static_cast<std::size_t>(idx[2])];
    total += mixstat::sign(a[0] - b[0]) * mixstat::sign(a[1] - c[1]);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return total;
}

std::vector<std::vector<double>> random_points(std::size_t r, std::size_t dim, std::mt19937_64& rng, bool ties) {
  std::uniform_int_distribution<int> small(0, 3);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> out(r, std::vector<double>(dim));
  for (auto& p : out)
    for (double& v : p) v = ties ? small(rng) : normal(rng);
  return out;
}

}  // namespace

TEST(Kernels, SignProductConcordantPair) { EXPECT_EQ(eval(KernelSpec::sign_product(), {{1, 1}, {2, 2}}), 1.0); }

TEST(Kernels, SignProductTieIsZero) { EXPECT_EQ(eval(KernelSpec::sign_product(), {{1, 2}, {1, 3}}), 0.0); }

TEST(Kernels, SpearmanSymConcordantTriple) {
  const std::vector<std::vector<double>> pts{{1, 1}, {2, 2}, {3, 3}};
  EXPECT_EQ(eval(KernelSpec::spearman_sym(), pts), 1.0);
  // Three times the six-term average.
  EXPECT_EQ(spearman_six_term_sum(pts) / 2.0, 1.0);
}

TEST(Kernels, SpearmanSymMatchesExplicitEnumeration) {
  std::mt19937_64 rng(17);
  const auto k = KernelSpec::spearman_sym();
  for (int i = 0; i < 500; ++i) {
    const auto pts = random_points(3, 2, rng, i % 2 == 0);
    EXPECT_EQ(eval(k, pts), spearman_six_term_sum(pts) / 2.0);
  }
}

TEST(Kernels, ArityMismatchThrows) {
  EXPECT_THROW(eval(KernelSpec::sign_product(), {{1, 2}}), std::invalid_argument);
  EXPECT_THROW(eval(KernelSpec::spearman_sym(), {{1, 2}, {2, 3}}), std::invalid_argument);
}

TEST(Kernels, DimensionMismatchThrows) {
  EXPECT_THROW(eval(KernelSpec::sign_product(), {{1}, {2}}), std::invalid_argument);
  EXPECT_THROW(eval(KernelSpec::spearman_sym(), {{1, 2, 3}, {2, 3, 4}, {0, 0, 0}}), std::invalid_argument);
}

TEST(Kernels, MeanKernelRespectsBound) {
  const auto k = KernelSpec::mean(2.0);
  EXPECT_EQ(eval(k, {{1.5}}), 1.5);
  EXPECT_THROW(eval(k, {{2.5}}), std::domain_error);
  EXPECT_THROW(KernelSpec::mean(0.0), std::invalid_argument);
}

TEST(Kernels, SymmetrizeAntisymmetricIsZero) {
  const auto k = mixstat::symmetrize([](std::span<const Point> p) { return p[0][0] - p[1][0]; }, 2, 10.0);
  EXPECT_EQ(eval(k, {{3.0}, {1.0}}), 0.0);
  EXPECT_EQ(eval(k, {{-2.5}, {4.0}}), 0.0);
}

TEST(Kernels, SymmetrizeSymmetricIsUnchanged) {
  const auto k = mixstat::symmetrize([](std::span<const Point> p) { return p[0][0] + p[1][0]; }, 2, 10.0);
  EXPECT_DOUBLE_EQ(eval(k, {{3.0}, {1.25}}), 4.25);
}

TEST(Kernels, SymmetrizedSpearmanBaseEqualsSpearmanSym) {
  // Base term scaled by 3 so that its symmetrization is SpearmanSym.
  const auto base = [](std::span<const Point> p) {
    return 3.0 * mixstat::sign(p[0][0] - p[1][0]) * mixstat::sign(p[0][1] - p[2][1]);
  };
  const auto sym = mixstat::symmetrize(base, 3, 3.0);
  const auto target = KernelSpec::spearman_sym();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto pts = random_points(3, 2, rng, false);
    EXPECT_NEAR(eval(sym, pts), eval(target, pts), 1e-15);
    EXPECT_NEAR(eval(sym, pts), spearman_six_term_sum(pts) / 2.0, 1e-15);
  }
}

TEST(Kernels, SymmetrizeRejectsOutOfBoundBase) {
  const auto k = mixstat::symmetrize([](std::span<const Point> p) { return 5.0 * p[0][0]; }, 1, 1.0);
  EXPECT_THROW(eval(k, {{1.0}}), std::domain_error);
}

TEST(Kernels, SymmetrizeIsIdempotent) {
  const auto base = [](std::span<const Point> p) { return std::tanh(p[0][0] - 2.0 * p[1][0] + 0.5 * p[2][0] * p[1][0]); };
  const auto once = mixstat::symmetrize(base, 3, 1.0);
  const auto twice = mixstat::symmetrize(once);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto pts = random_points(3, 1, rng, false);
    EXPECT_NEAR(eval(once, pts), eval(twice, pts), 1e-15);
  }
}

TEST(Kernels, TableKernelCanonicalizesTuples) {
  const auto k = KernelSpec::from_entries(3, 2, {{{0, 1}, 0.5}, {{2, 2}, -1.0}}, 0.25);
  EXPECT_EQ(k.kind(), mixstat::KernelKind::BoundedCustom);
  EXPECT_EQ(k.bound(), 1.0);
  const std::vector<int> a{1, 0}, b{2, 2}, c{1, 2};
  EXPECT_EQ(k.eval_states(a), 0.5);
  EXPECT_EQ(k.eval_states(b), -1.0);
  EXPECT_EQ(k.eval_states(c), 0.25);
  EXPECT_EQ(eval(k, {{1.0}, {0.0}}), 0.5);
  EXPECT_THROW(eval(k, {{1.5}, {0.0}}), std::invalid_argument);
}

TEST(Kernels, TableKernelRejectsConflictingPermutations) {
  EXPECT_THROW(KernelSpec::from_entries(2, 2, {{{0, 1}, 0.5}, {{1, 0}, 0.4}}), std::invalid_argument);
  EXPECT_NO_THROW(KernelSpec::from_entries(2, 2, {{{0, 1}, 0.5}, {{1, 0}, 0.5}}));
}

TEST(Kernels, TableKernelRejectsValuesAboveBound) {
  EXPECT_THROW(KernelSpec::from_entries(2, 1, {{{0}, 2.0}}, 0.0, 1.0), std::invalid_argument);
}

TEST(Kernels, TableJsonRoundTrip) {
  const auto k = KernelSpec::bounded_custom(3, 3, [](std::span<const int> s) { return (s[0] + s[1] * s[2]) / 5.0 - 0.5; });
  const auto j = mixstat::kernel_table_to_json(k);
  const auto back = mixstat::kernel_table_from_json(j);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const std::vector<int> t{a, b, c};
        EXPECT_EQ(k.eval_states(t), back.eval_states(t));
      }
  EXPECT_EQ(back.bound(), k.bound());
}

TEST(Kernels, TableJsonRejectsUnknownField) {
  nlohmann::json j{{"states", 2}, {"order", 1}, {"entries", nlohmann::json::array()}, {"colour", "red"}};
  EXPECT_THROW(mixstat::kernel_table_from_json(j), std::invalid_argument);
}

TEST(Kernels, TableLoadsFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "mixstat_kernel_table.json";
  {
    std::ofstream out(path);
    out << R"({"states": 2, "order": 2, "entries": [{"tuple": [0, 0], "value": 0.5}, {"tuple": [1, 1], "value": 0.5}], "default": -0.5})";
  }
  const auto k = mixstat::load_kernel_table(path);
  const std::vector<int> same{1, 1}, diff{0, 1};
  EXPECT_EQ(k.eval_states(same), 0.5);
  EXPECT_EQ(k.eval_states(diff), -0.5);
  std::filesystem::remove(path);
}

TEST(Kernels, KernelByName) {
  EXPECT_EQ(mixstat::kernel_from_name("sign_product").kind(), mixstat::KernelKind::SignProduct);
  EXPECT_EQ(mixstat::kernel_from_name("spearman_sym").order(), 3);
  EXPECT_EQ(mixstat::kernel_from_name("mean", 4.0).bound(), 4.0);
  EXPECT_THROW(mixstat::kernel_from_name("cosine"), std::invalid_argument);
}

// Fuzzed bound and exact permutation invariance for every kernel kind.
TEST(KernelProperties, BoundedAndPermutationInvariant) {
  std::mt19937_64 rng(2024);
  std::vector<std::pair<KernelSpec, std::size_t>> kernels{
      {KernelSpec::mean(3.0), 1},
      {KernelSpec::sign_product(), 2},
      {KernelSpec::spearman_sym(), 2},
      {mixstat::symmetrize([](std::span<const Point> p) { return std::sin(p[0][0] * 3.0 + p[1][0] - p[2][0] * p[2][0]); }, 3, 1.0), 1},
  };
  for (auto& [k, dim] : kernels) {
    for (int trial = 0; trial < 300; ++trial) {
      auto pts = random_points(static_cast<std::size_t>(k.order()), dim, rng, trial % 3 == 0);
      if (k.kind() == mixstat::KernelKind::Mean) pts[0][0] = std::clamp(pts[0][0], -3.0, 3.0);
      const double v = eval(k, pts);
      EXPECT_LE(std::abs(v), k.bound());
      std::vector<std::size_t> perm(pts.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<std::vector<double>> shuffled;
        for (std::size_t i : perm) shuffled.push_back(pts[i]);
        EXPECT_EQ(eval(k, shuffled), v);
      }
    }
  }
}

TEST(KernelProperties, TableKernelBoundedAndInvariant) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> raw(64);
  for (double& v : raw) v = u(rng);
  const auto k = KernelSpec::bounded_custom(4, 3, [&](std::span<const int> s) { return raw[static_cast<std::size_t>(s[0] * 16 + s[1] * 4 + s[2])]; });
  std::uniform_int_distribution<int> st(0, 3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> t{st(rng), st(rng), st(rng)};
    const double v = k.eval_states(t);
    EXPECT_LE(std::abs(v), k.bound());
    std::sort(t.begin(), t.end());
    do {
      EXPECT_EQ(k.eval_states(t), v);
    } while (std::next_permutation(t.begin(), t.end()));
  }
}
