#include "arealstat/config.hpp"

#include <cmath>
#include <regex>

#include "arealstat/error.hpp"

namespace arealstat::cli {

namespace {

constexpr const char* kModule = "cli";

[[noreturn]] void reject(const std::string& message) {
  throw Error(kModule, ErrorKind::config, message);
}

}  // namespace

std::string_view to_string(Profile profile) noexcept {
  return profile == Profile::paper ? "paper" : "permissive";
}

std::optional<ingest::YearRange> parse_period(const std::string& text) {
  if (text.empty()) return std::nullopt;
  static const std::regex pattern(R"(^\s*(\d{4})\s*(?:-\s*(\d{4}))?\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) reject("period '" + text + "' is not YYYY or YYYY-YYYY");
  ingest::YearRange range{std::stoi(m[1]), m[2].matched ? std::stoi(m[2]) : std::stoi(m[1])};
  if (range.empty()) reject("period '" + text + "' ends before it starts");
  return range;
}

standardize::Aggregation aggregation_of(const RunConfig& config) {
  if (config.aggregation == "mean") return standardize::Aggregation::mean;
  if (config.aggregation == "population_weighted") return standardize::Aggregation::population_weighted;
  reject("aggregation must be mean or population_weighted, got '" + config.aggregation + "'");
}

spatial::VarianceAssumption variance_of(const RunConfig& config) {
  if (config.variance == "randomization") return spatial::VarianceAssumption::randomization;
  if (config.variance == "normality") return spatial::VarianceAssumption::normality;
  reject("variance must be randomization or normality, got '" + config.variance + "'");
}

spatial::IslandPolicy island_policy_of(const RunConfig& config) {
  return config.profile == Profile::paper ? spatial::IslandPolicy::error : spatial::IslandPolicy::drop;
}

void validate(const RunConfig& config, const std::set<std::string>& explicit_options) {
  if (config.min_deaths < 0) reject("min_deaths must be >= 0, got " + std::to_string(config.min_deaths));
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) reject("alpha must lie in (0, 1)");
  if (!(config.snap_tolerance > 0.0)) reject("snap_tolerance must be positive");
  if (!(config.ridge_lambda > 0.0)) reject("ridge_lambda must be positive");
  if (!(config.cond_max > 1.0)) reject("cond_max must exceed 1");
  if (config.k_min < 2 || config.k_max < config.k_min) reject("k range must satisfy 2 <= k_min <= k_max");
  if (config.oracle && config.n_perm < 99) reject("n_perm must be at least 99");
  if (config.jobs < 1) reject("jobs must be at least 1");
  if (config.records_format != "auto" && config.records_format != "wonder" &&
      config.records_format != "canonical") {
    reject("records_format must be auto, wonder or canonical");
  }
  parse_period(config.period);
  aggregation_of(config);
  variance_of(config);

  if (config.profile != Profile::paper) return;
  const auto pinned = [&](const char* name, bool differs, const std::string& pin) {
    if (explicit_options.contains(name) && differs) {
      reject(std::string("profile=paper pins ") + name + " = " + pin +
             "; use --profile permissive to change it");
    }
  };
  pinned("min_deaths", config.min_deaths != 16, "16");
  pinned("alpha", config.alpha != 0.05, "0.05");
  pinned("star_gistar", !config.star_gistar, "true");
  pinned("fdr", config.fdr, "false");
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"records", c.records.string()},
          {"records_format", c.records_format},
          {"geometry", c.geometry.string()},
          {"gal", c.gal.string()},
          {"values", c.values.string()},
          {"id_property", c.id_property},
          {"period", c.period},
          {"min_deaths", c.min_deaths},
          {"exclude", c.exclude},
          {"aggregation", c.aggregation},
          {"snap_tolerance", c.snap_tolerance},
          {"ridge_lambda", c.ridge_lambda},
          {"cond_max", c.cond_max},
          {"k_min", c.k_min},
          {"k_max", c.k_max},
          {"alpha", c.alpha},
          {"star_gistar", c.star_gistar},
          {"fdr", c.fdr},
          {"variance", c.variance},
          {"islands", c.profile == Profile::paper ? "error" : "drop"},
          {"oracle", c.oracle},
          {"n_perm", c.n_perm},
          {"seed", c.seed},
          {"out", c.out.string()},
          {"profile", to_string(c.profile)},
          {"jobs", c.jobs}};
}

}  // namespace arealstat::cli
