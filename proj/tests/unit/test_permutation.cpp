#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "arealstat/error.hpp"
#include "arealstat/permutation.hpp"
#include "arealstat/spatial_stats.hpp"
#include "gen.hpp"
#include "lattice.hpp"

using namespace arealstat;
using namespace arealstat::spatial;

TEST_CASE("a statistic that is always zero has p = 1") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  CHECK(permutation_pvalue([](std::span<const double>) { return 0.0; }, v, {999, 1, 1}) == 1.0);
  const auto local = conditional_permutation_pvalues([](std::size_t, std::span<const double>) { return 0.0; }, v, {99, 1, 1});
  for (double p : local) CHECK(p == 1.0);
}

TEST_CASE("an observed value above every permutation has p = 1/(1+n)") {
  std::vector<double> v(30);
  std::iota(v.begin(), v.end(), 0.0);
  // Ordered sum x_i * i is maximal for the sorted input.
  auto f = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * static_cast<double>(i);
    return s - 4000.0;
  };
  CHECK(permutation_pvalue(f, v, {999, 3, 1}) == doctest::Approx(1.0 / 1000.0));
}

TEST_CASE("p-values do not depend on the thread count and repeat for a seed") {
  testing::Gen g(1);
  const auto w = weights::row_standardize(testing::rook_lattice(5, 5), false);
  const auto v = g.normals(25);
  const auto stat = moran_deviation_statistic(w);
  const double one = permutation_pvalue(stat, v, {4999, 9, 1});
  CHECK(permutation_pvalue(stat, v, {4999, 9, 4}) == one);
  CHECK(permutation_pvalue(stat, v, {4999, 9, 1}) == one);
  const auto local = local_moran_z_statistic(v, w);
  CHECK(conditional_permutation_pvalues(local, v, {999, 9, 1}) == conditional_permutation_pvalues(local, v, {999, 9, 3}));
}

TEST_CASE("conditional permutation keeps the focal unit in place") {
  const std::vector<double> v{10, 1, 2, 3, 4, 5};
  // Every unit reads position 0: fixed only when unit 0 is the focal one.
  const auto p = conditional_permutation_pvalues(
      [](std::size_t, std::span<const double> x) { return x[0]; }, v, {1999, 4, 1});
  CHECK(p[0] == 1.0);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(std::abs(p[i] - 0.2) < 0.04);
}

TEST_CASE("bounded draws are uniform and shuffles cover every permutation") {
  Rng rng(123);
  std::vector<int> counts(7, 0);
  for (int k = 0; k < 70000; ++k) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  std::map<std::vector<int>, int> seen;
  for (int k = 0; k < 6000; ++k) {
    std::vector<int> x{0, 1, 2};
    rng.shuffle(std::span<int>(x));
    ++seen[x];
  }
  CHECK(seen.size() == 6);
  for (auto& [perm, c] : seen) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("too few permutations are rejected") {
  const std::vector<double> v{1, 2, 3};
  CHECK_THROWS_AS(permutation_pvalue([](std::span<const double>) { return 0.0; }, v, {50, 1, 1}), Error);
}

TEST_CASE("derived seeds differ by stream") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
