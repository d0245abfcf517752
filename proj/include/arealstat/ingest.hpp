#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace arealstat::ingest {

/// One unit x cancer-site x year observation. Suppressed records carry no
/// deaths, population or rate.
struct MortalityRecord {
  std::string unit_id;
  std::string unit_name;
  std::string site;
  int year = 0;
  std::optional<std::int64_t> deaths;
  std::optional<std::int64_t> population;
  std::optional<double> age_adjusted_rate;
  bool suppressed = false;

  friend bool operator==(const MortalityRecord&, const MortalityRecord&) = default;
};

struct YearRange {
  int first = 0;
  int last = 0;

  bool contains(int year) const noexcept { return year >= first && year <= last; }
  bool empty() const noexcept { return last < first; }
  friend bool operator==(const YearRange&, const YearRange&) = default;
};

/// Coverage summary. `units` and `sites` are sorted and define the row and
/// column order of every downstream matrix.
struct DatasetManifest {
  std::vector<std::string> units;
  std::vector<std::string> sites;
  YearRange years;
  std::size_t record_count = 0;
  std::vector<std::string> excluded_units;
};

struct Dataset {
  std::vector<MortalityRecord> records;
  DatasetManifest manifest;
};

DatasetManifest summarize(std::span<const MortalityRecord> records,
                          std::vector<std::string> excluded_units = {});

nlohmann::json to_json(const DatasetManifest& manifest);

enum class Field { unit_id, unit_name, site, year, deaths, population, age_adjusted_rate };

std::string_view to_string(Field field) noexcept;

/// Maps export header names onto record fields. Matching ignores case and
/// treats '-', '_' and runs of spaces as equivalent.
class ColumnAliases {
 public:
  static ColumnAliases wonder_defaults();

  void add(Field field, std::string_view alias);
  std::optional<Field> resolve(std::string_view header) const;

 private:
  std::map<std::string, Field> by_name_;
};

struct WonderOptions {
  ColumnAliases aliases = ColumnAliases::wonder_defaults();
  std::vector<std::string> suppression_tokens{"Suppressed", "Unreliable", "Missing"};
};

/// Parses a tab-delimited WONDER export. Parsing stops at the first line
/// equal to "Notes" or starting with "---"; rows whose Notes column reads
/// "Total" are subtotal rows and are skipped.
Dataset parse_wonder_export(std::istream& in, const WonderOptions& options = {});
Dataset parse_wonder_export(const std::filesystem::path& path, const WonderOptions& options = {});

/// Alaska, Hawaii, Puerto Rico and the other territories, by USPS code and
/// by FIPS code.
std::vector<std::string> default_excluded_units();

struct InclusionRules {
  std::int64_t min_deaths = 16;
  std::vector<std::string> excluded_units = default_excluded_units();
};

struct ExclusionReport {
  std::int64_t min_deaths = 0;
  std::vector<std::string> excluded_units;
  std::size_t input_records = 0;
  std::size_t kept_records = 0;
  std::size_t dropped_excluded_unit = 0;
  std::size_t dropped_suppressed = 0;
  std::size_t dropped_zero_deaths = 0;
  std::size_t dropped_min_deaths = 0;
  /// (unit, site) pairs that had records but lost every year.
  std::vector<std::pair<std::string, std::string>> emptied_pairs;
};

nlohmann::json to_json(const ExclusionReport& report);

struct FilterResult {
  Dataset dataset;
  ExclusionReport report;
};

/// Rules are checked in order excluded_unit, suppressed, zero_deaths,
/// min_deaths; a dropped record is counted under the first rule it hits.
/// The zero-count rule only applies when min_deaths > 0.
FilterResult apply_inclusion_rules(std::span<const MortalityRecord> records,
                                   const InclusionRules& rules = {});

inline constexpr std::string_view kCanonicalHeader =
    "unit_id,unit_name,site,year,deaths,population,age_adjusted_rate,suppressed";

Dataset read_canonical_csv(std::istream& in);
Dataset read_canonical_csv(const std::filesystem::path& path);
void write_canonical_csv(std::ostream& out, std::span<const MortalityRecord> records);
std::string canonical_csv(std::span<const MortalityRecord> records);

}  // namespace arealstat::ingest
