#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arealstat/weights.hpp"

namespace arealstat::spatial {

enum class VarianceAssumption { randomization, normality };
enum class IslandPolicy { error, drop };

enum class LocalClass { high_high, low_low, high_low, low_high, hotspot, coldspot, not_significant };

/// Stable labels used in every output ("High-High", "Hotspot", ...).
std::string_view to_string(LocalClass cls) noexcept;
std::optional<LocalClass> parse_local_class(std::string_view label) noexcept;

struct GlobalMoranOptions {
  VarianceAssumption assumption = VarianceAssumption::randomization;
  IslandPolicy islands = IslandPolicy::error;
};

struct GlobalMoranResult {
  std::string site;
  double I = 0.0;
  double expected_I = 0.0;
  double variance_I = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
  double p_one_sided = 1.0;  // upper tail: positive autocorrelation
  std::size_t n = 0;
  /// False when n <= 3; variance, z and p are then NaN.
  bool inference_available = true;
  /// Soft sanity flag: |I| > 1.5 on row-standardized weights.
  bool outside_soft_bounds = false;
  std::vector<std::string> dropped_units;
};

/// Global Moran's I with Cliff-Ord moments under the randomization (default)
/// or normality assumption.
GlobalMoranResult global_moran(std::span<const double> values, const weights::SpatialWeights& w,
                               const GlobalMoranOptions& options = {}, std::string site = {});

struct LocalOptions {
  double alpha = 0.05;
  /// Benjamini-Hochberg gating instead of raw p < alpha.
  bool fdr = false;
  IslandPolicy islands = IslandPolicy::error;
};

struct LocalStatResult {
  std::string unit_id;
  std::string site;
  double statistic = 0.0;
  double z = 0.0;
  double p_two_sided = 1.0;
  LocalClass cls = LocalClass::not_significant;
};

/// Local Moran's I_i = (x_i - mean) / s^2 * sum_j w_ij (x_j - mean) with the
/// sample variance s^2. z-scores use the conditional randomization moments.
std::vector<LocalStatResult> local_moran(std::span<const double> values,
                                         const weights::SpatialWeights& w,
                                         const LocalOptions& options = {}, const std::string& site = {});

/// Getis-Ord G_i*. Mean and sample standard deviation run over all n units;
/// the statistic is itself the z-score.
std::vector<LocalStatResult> getis_ord_gistar(std::span<const double> values,
                                              const weights::SpatialWeights& w,
                                              const LocalOptions& options = {},
                                              const std::string& site = {});

double normal_two_sided_p(double z) noexcept;

/// Flags p-values rejected by the Benjamini-Hochberg step-up rule at level
/// alpha. NaN entries are never rejected.
std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double alpha);

// Centered statistics for the permutation oracle. Each closure captures the
// moments that a permutation of `values` leaves unchanged.

/// I - E[I] for a permuted value vector.
std::function<double(std::span<const double>)> moran_deviation_statistic(
    const weights::SpatialWeights& w);

/// (I_i - E[I_i]) / sd(I_i) for unit i of a permuted vector.
std::function<double(std::size_t, std::span<const double>)> local_moran_z_statistic(
    std::span<const double> values, const weights::SpatialWeights& w);

/// G_i* for unit i of a permuted vector.
std::function<double(std::size_t, std::span<const double>)> gistar_statistic(
    std::span<const double> values, const weights::SpatialWeights& w);

struct HotspotTally {
  /// Every unit, sorted by descending count then unit id.
  std::vector<std::pair<std::string, int>> counts;

  /// The first n units with a non-zero count.
  std::vector<std::pair<std::string, int>> top(std::size_t n) const;
};

HotspotTally hotspot_frequency(std::span<const std::vector<LocalStatResult>> per_site);

void write_local_csv(std::ostream& out, std::span<const LocalStatResult> results);
void write_global_csv(std::ostream& out, std::span<const GlobalMoranResult> results);
void write_tally_csv(std::ostream& out, std::span<const std::pair<std::string, int>> counts);

}  // namespace arealstat::spatial
