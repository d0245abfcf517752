#include "arealstat/permutation.hpp"

#include <algorithm>
#include <cmath>

#include "arealstat/error.hpp"
#include "arealstat/parallel.hpp"

namespace arealstat::spatial {

namespace {

constexpr const char* kModule = "spatial_stats";
constexpr std::size_t kBlock = 1000;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool at_least_as_extreme(double permuted, double observed) noexcept {
  const double a = std::abs(observed);
  return std::abs(permuted) >= a - 1e-12 * std::max(1.0, a);
}

void validate(const PermutationOptions& options, std::size_t n) {
  if (options.n_perm < 99) {
    throw Error(kModule, ErrorKind::validation, "permutation count must be at least 99");
  }
  if (n < 2) throw Error(kModule, ErrorKind::insufficient_data, "permutation needs at least two units");
}

__extension__ using u128 = unsigned __int128;

}  // namespace

std::uint64_t Rng::below(std::uint64_t bound) {
  std::uint64_t x = engine_();
  u128 m = static_cast<u128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = engine_();
      m = static_cast<u128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double permutation_pvalue(const std::function<double(std::span<const double>)>& statistic,
                          std::span<const double> values, const PermutationOptions& options) {
  validate(options, values.size());
  const double observed = statistic(values);
  const std::size_t blocks = (options.n_perm + kBlock - 1) / kBlock;
  std::vector<std::size_t> hits(blocks, 0);
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, b));
    std::vector<double> perm(values.begin(), values.end());
    const std::size_t draws = std::min(kBlock, options.n_perm - b * kBlock);
    std::size_t count = 0;
    for (std::size_t d = 0; d < draws; ++d) {
      rng.shuffle(std::span<double>(perm));
      if (at_least_as_extreme(statistic(perm), observed)) ++count;
    }
    hits[b] = count;
  });
  std::size_t total = 0;
  for (auto h : hits) total += h;
  return static_cast<double>(1 + total) / static_cast<double>(1 + options.n_perm);
}

std::vector<double> conditional_permutation_pvalues(
    const std::function<double(std::size_t, std::span<const double>)>& statistic,
    std::span<const double> values, const PermutationOptions& options) {
  validate(options, values.size());
  const std::size_t n = values.size();
  std::vector<double> p(n, 1.0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, i));
    std::vector<double> perm(values.begin(), values.end());
    std::vector<double> others;
    others.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(values[j]);
    }
    const double observed = statistic(i, values);
    std::size_t count = 0;
    for (std::size_t d = 0; d < options.n_perm; ++d) {
      rng.shuffle(std::span<double>(others));
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j != i) perm[j] = others[k++];
      }
      if (at_least_as_extreme(statistic(i, perm), observed)) ++count;
    }
    p[i] = static_cast<double>(1 + count) / static_cast<double>(1 + options.n_perm);
  });
  return p;
}

}  // namespace arealstat::spatial
