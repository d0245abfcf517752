#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace arealstat::spatial {

/// mt19937_64 with a portable bounded draw, so a seed reproduces the same
/// permutations on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Stream seed for block `stream` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

struct PermutationOptions {
  std::size_t n_perm = 9999;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
};

/// Two-sided empirical p = (1 + #{|perm| >= |observed|}) / (1 + n_perm).
/// Draws are split into fixed blocks with derived seeds, so the result does
/// not depend on the thread count.
double permutation_pvalue(const std::function<double(std::span<const double>)>& statistic,
                          std::span<const double> values, const PermutationOptions& options);

/// Conditional permutation: for each unit i, values[i] stays in place and
/// the others are shuffled.
std::vector<double> conditional_permutation_pvalues(
    const std::function<double(std::size_t, std::span<const double>)>& statistic,
    std::span<const double> values, const PermutationOptions& options);

}  // namespace arealstat::spatial
