#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealstat/ingest.hpp"

namespace arealstat::standardize {

struct AgeStratum {
  std::string age_group;
  std::int64_t deaths = 0;
  std::int64_t population = 0;
  double weight = 0.0;  // share of the standard population
};

/// Direct age standardization: sum_i (deaths_i / population_i) * weight_i,
/// per 100,000. Weights must sum to 1 within 1e-9.
double age_adjusted_rate(std::span<const AgeStratum> strata);

struct StandardPopulation {
  std::vector<std::string> age_groups;
  std::vector<double> weights;
};

/// 2000 U.S. standard population, 19 age groups (Census P25-1130; counts
/// per million divided by 1e6).
StandardPopulation us2000_standard_population();

/// Reads a CSV with header `age_group,weight`.
StandardPopulation read_standard_population(std::istream& in);
StandardPopulation read_standard_population(const std::filesystem::path& path);

std::vector<AgeStratum> make_strata(const StandardPopulation& standard,
                                    std::span<const std::int64_t> deaths,
                                    std::span<const std::int64_t> populations);

/// Units x sites matrix of rates per 100,000. When `standardized` is set the
/// columns are z-scores and `column_means` / `column_sds` hold the raw
/// column moments.
struct RateMatrix {
  std::vector<std::string> unit_ids;
  std::vector<std::string> sites;
  Eigen::MatrixXd values;
  bool standardized = false;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;

  std::size_t unit_count() const noexcept { return unit_ids.size(); }
  std::size_t site_count() const noexcept { return sites.size(); }
  std::optional<std::size_t> site_index(const std::string& site) const;
  std::vector<double> column(std::size_t site) const;
};

enum class Aggregation { mean, population_weighted };

/// Cell (u, s) is the average of the annual rates within `period`. Every
/// unit x site cell must have at least one year, otherwise the call fails
/// listing all gaps.
RateMatrix build_rate_matrix(std::span<const ingest::MortalityRecord> records,
                             const std::vector<std::string>& units,
                             const std::vector<std::string>& sites, ingest::YearRange period,
                             Aggregation aggregation = Aggregation::mean);

RateMatrix build_rate_matrix(const ingest::Dataset& dataset, ingest::YearRange period,
                             Aggregation aggregation = Aggregation::mean);

/// Column-wise (x - mean) / sd with the sample (n - 1) standard deviation.
RateMatrix zscore_normalize(const RateMatrix& matrix);

/// CSV with a `unit_id` column followed by one column per site.
void write_matrix_csv(std::ostream& out, const RateMatrix& matrix);
std::string matrix_csv(const RateMatrix& matrix);
RateMatrix read_matrix_csv(std::istream& in);
RateMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace arealstat::standardize
