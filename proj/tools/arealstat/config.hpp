#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arealstat/ingest.hpp"
#include "arealstat/spatial_stats.hpp"
#include "arealstat/standardize.hpp"

namespace arealstat::cli {

enum class Profile { paper, permissive };

struct RunConfig {
  std::filesystem::path records;
  std::string records_format = "auto";  // auto | wonder | canonical
  std::filesystem::path geometry;
  std::filesystem::path gal;
  std::filesystem::path values;  // rate matrix CSV; default <out>/rate_matrix.csv
  std::string id_property = "unit_id";
  std::string period;  // "YYYY" or "YYYY-YYYY"; empty means every year present
  std::int64_t min_deaths = 16;
  std::vector<std::string> exclude = ingest::default_excluded_units();
  std::string aggregation = "mean";
  double snap_tolerance = 1e-6;
  double ridge_lambda = 1e-8;
  double cond_max = 1e12;
  int k_min = 2;
  int k_max = 10;
  double alpha = 0.05;
  bool star_gistar = true;
  bool fdr = false;
  std::string variance = "randomization";
  bool oracle = false;
  std::size_t n_perm = 9999;
  std::uint64_t seed = 20240601;
  std::filesystem::path out = "arealstat_out";
  Profile profile = Profile::paper;
  unsigned jobs = 1;
};

std::string_view to_string(Profile profile) noexcept;

/// Checks ranges and, under the paper profile, rejects any option in
/// `explicit_options` whose value departs from the pinned one.
void validate(const RunConfig& config, const std::set<std::string>& explicit_options);

std::optional<ingest::YearRange> parse_period(const std::string& text);
standardize::Aggregation aggregation_of(const RunConfig& config);
spatial::VarianceAssumption variance_of(const RunConfig& config);
spatial::IslandPolicy island_policy_of(const RunConfig& config);

/// Fully resolved config, defaults included.
nlohmann::json to_json(const RunConfig& config);

}  // namespace arealstat::cli
