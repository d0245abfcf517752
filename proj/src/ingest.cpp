#include "arealstat/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::ingest {

namespace {

constexpr const char* kModule = "ingest";

std::string normalize_header(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (char c : text::trim(name)) {
    if (c == '-' || c == '_' || c == ' ' || c == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::string unquote(std::string_view cell) {
  cell = text::trim(cell);
  if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
    cell = cell.substr(1, cell.size() - 2);
  }
  return std::string(text::trim(cell));
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cells.push_back(unquote(line.substr(start, tab == std::string_view::npos ? tab : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

bool is_footer(std::string_view line) {
  const std::string cell = unquote(line);
  return cell == "Notes" || cell.rfind("---", 0) == 0;
}

using Key = std::tuple<std::string, std::string, int>;

void check_unique(const std::vector<MortalityRecord>& records) {
  std::map<Key, int> seen;
  for (const auto& r : records) ++seen[{r.unit_id, r.site, r.year}];
  std::vector<std::string> offenders;
  for (const auto& [key, count] : seen) {
    if (count > 1) {
      offenders.push_back("(" + std::get<0>(key) + ", " + std::get<1>(key) + ", " +
                          std::to_string(std::get<2>(key)) + ") x" + std::to_string(count));
    }
  }
  if (!offenders.empty()) {
    throw Error(kModule, ErrorKind::duplicate_key,
                "duplicate (unit, site, year) keys: " + std::to_string(offenders.size()),
                std::move(offenders));
  }
}

// Returns an empty string when the record satisfies the type invariants.
std::string invariant_violation(const MortalityRecord& r) {
  if (r.unit_id.empty()) return "empty unit_id";
  if (r.site.empty()) return "empty site";
  if (r.suppressed) {
    if (r.deaths || r.population || r.age_adjusted_rate) {
      return "suppressed record carries numeric values";
    }
    return {};
  }
  if (!r.deaths || !r.population || !r.age_adjusted_rate) {
    return "non-suppressed record is missing deaths, population or rate";
  }
  if (*r.deaths < 0) return "negative deaths";
  if (*r.population <= 0) return "population must be positive";
  if (*r.deaths > *r.population) return "deaths exceed population";
  if (!(*r.age_adjusted_rate >= 0.0)) return "age-adjusted rate must be non-negative";
  return {};
}

}  // namespace

std::string_view to_string(Field field) noexcept {
  switch (field) {
    case Field::unit_id: return "unit_id";
    case Field::unit_name: return "unit_name";
    case Field::site: return "site";
    case Field::year: return "year";
    case Field::deaths: return "deaths";
    case Field::population: return "population";
    case Field::age_adjusted_rate: return "age_adjusted_rate";
  }
  return "unknown";
}

DatasetManifest summarize(std::span<const MortalityRecord> records,
                          std::vector<std::string> excluded_units) {
  DatasetManifest m;
  std::set<std::string> units;
  std::set<std::string> sites;
  for (const auto& r : records) {
    units.insert(r.unit_id);
    sites.insert(r.site);
    if (m.record_count == 0) {
      m.years = {r.year, r.year};
    } else {
      m.years.first = std::min(m.years.first, r.year);
      m.years.last = std::max(m.years.last, r.year);
    }
    ++m.record_count;
  }
  m.units.assign(units.begin(), units.end());
  m.sites.assign(sites.begin(), sites.end());
  m.excluded_units = std::move(excluded_units);
  return m;
}

nlohmann::json to_json(const DatasetManifest& m) {
  return {{"units", m.units},
          {"sites", m.sites},
          {"years", {{"first", m.years.first}, {"last", m.years.last}}},
          {"record_count", m.record_count},
          {"excluded_units", m.excluded_units}};
}

ColumnAliases ColumnAliases::wonder_defaults() {
  ColumnAliases a;
  for (auto name : {"unit_id", "State Code", "States Code", "State Abbreviation", "Code"}) {
    a.add(Field::unit_id, name);
  }
  for (auto name : {"unit_name", "State", "States", "Name"}) a.add(Field::unit_name, name);
  for (auto name : {"site", "Cancer Sites", "Cancer Site", "Leading Cancer Sites", "Site"}) {
    a.add(Field::site, name);
  }
  for (auto name : {"year", "Year Code"}) a.add(Field::year, name);
  for (auto name : {"deaths", "Count"}) a.add(Field::deaths, name);
  a.add(Field::population, "population");
  for (auto name : {"age_adjusted_rate", "Age Adjusted Rate", "Age-Adjusted Rate",
                    "Age Adjusted Death Rate"}) {
    a.add(Field::age_adjusted_rate, name);
  }
  return a;
}

void ColumnAliases::add(Field field, std::string_view alias) {
  by_name_[normalize_header(alias)] = field;
}

std::optional<Field> ColumnAliases::resolve(std::string_view header) const {
  auto it = by_name_.find(normalize_header(header));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

Dataset parse_wonder_export(std::istream& in, const WonderOptions& options) {
  text::LineReader reader(in);
  std::string line;
  std::vector<std::string> header;
  while (reader.next(line)) {
    if (!text::trim(line).empty()) {
      header = split_tabs(line);
      break;
    }
  }
  if (header.empty()) throw Error(kModule, ErrorKind::empty_dataset, "export is empty");

  std::map<Field, std::size_t> column;
  std::optional<std::size_t> notes_column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (normalize_header(header[c]) == "notes") {
      notes_column = c;
      continue;
    }
    if (auto field = options.aliases.resolve(header[c])) column.try_emplace(*field, c);
  }
  std::vector<std::string> missing;
  for (Field f : {Field::unit_id, Field::site, Field::year, Field::deaths, Field::population,
                  Field::age_adjusted_rate}) {
    if (!column.contains(f)) missing.emplace_back(to_string(f));
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw Error(kModule, ErrorKind::format, "missing mandatory column(s): " + names, missing);
  }
  std::size_t needed = 0;
  for (const auto& [field, c] : column) needed = std::max(needed, c + 1);

  auto is_token = [&](const std::string& cell) {
    return std::any_of(options.suppression_tokens.begin(), options.suppression_tokens.end(),
                       [&](const std::string& t) { return cell.find(t) != std::string::npos; });
  };

  std::vector<MortalityRecord> records;
  std::vector<std::string> row_errors;
  while (reader.next(line)) {
    if (is_footer(line)) break;
    if (text::trim(line).empty()) continue;
    const auto cells = split_tabs(line);
    const auto where = "line " + std::to_string(reader.line_number()) + ": ";
    if (notes_column && *notes_column < cells.size() && cells[*notes_column] == "Total") continue;
    if (cells.size() < needed) {
      row_errors.push_back(where + "expected at least " + std::to_string(needed) + " cells, got " +
                           std::to_string(cells.size()));
      continue;
    }
    auto cell = [&](Field f) -> const std::string& { return cells[column.at(f)]; };

    MortalityRecord r;
    r.unit_id = cell(Field::unit_id);
    r.site = cell(Field::site);
    r.unit_name = column.contains(Field::unit_name) ? cell(Field::unit_name) : r.unit_id;
    bool ok = true;
    if (auto year = text::parse_int(cell(Field::year))) {
      r.year = static_cast<int>(*year);
    } else {
      row_errors.push_back(where + "malformed year '" + cell(Field::year) + "'");
      ok = false;
    }
    r.suppressed = is_token(cell(Field::deaths)) || is_token(cell(Field::population)) ||
                   is_token(cell(Field::age_adjusted_rate));
    if (!r.suppressed) {
      r.deaths = text::parse_int(cell(Field::deaths));
      r.population = text::parse_int(cell(Field::population));
      r.age_adjusted_rate = text::parse_double(cell(Field::age_adjusted_rate));
      for (auto [f, present] : {std::pair{Field::deaths, r.deaths.has_value()},
                                std::pair{Field::population, r.population.has_value()},
                                std::pair{Field::age_adjusted_rate, r.age_adjusted_rate.has_value()}}) {
        if (!present) {
          row_errors.push_back(where + "malformed " + std::string(to_string(f)) + " '" + cell(f) + "'");
          ok = false;
        }
      }
    }
    if (!ok) continue;
    if (auto problem = invariant_violation(r); !problem.empty()) {
      row_errors.push_back(where + problem);
      continue;
    }
    records.push_back(std::move(r));
  }
  if (!row_errors.empty()) {
    throw Error(kModule, ErrorKind::format,
                std::to_string(row_errors.size()) + " malformed row(s) in export",
                std::move(row_errors));
  }
  if (records.empty()) throw Error(kModule, ErrorKind::empty_dataset, "export has no data rows");
  check_unique(records);
  auto manifest = summarize(records);
  return {std::move(records), std::move(manifest)};
}

Dataset parse_wonder_export(const std::filesystem::path& path, const WonderOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, ErrorKind::io, "cannot open '" + path.string() + "'");
  return parse_wonder_export(in, options);
}

std::vector<std::string> default_excluded_units() {
  return {"AK", "HI", "PR", "GU", "VI", "AS", "MP", "02", "15", "72", "66", "78", "60", "69"};
}

FilterResult apply_inclusion_rules(std::span<const MortalityRecord> records,
                                   const InclusionRules& rules) {
  ExclusionReport report;
  report.min_deaths = rules.min_deaths;
  report.excluded_units = rules.excluded_units;
  report.input_records = records.size();
  const std::set<std::string> excluded(rules.excluded_units.begin(), rules.excluded_units.end());

  std::vector<MortalityRecord> kept;
  std::map<std::pair<std::string, std::string>, std::size_t> kept_per_pair;
  for (const auto& r : records) {
    if (excluded.contains(r.unit_id)) {
      ++report.dropped_excluded_unit;
      continue;
    }
    auto& pair_count = kept_per_pair[{r.unit_id, r.site}];
    if (r.suppressed) {
      ++report.dropped_suppressed;
    } else if (rules.min_deaths > 0 && r.deaths.value_or(0) == 0) {
      ++report.dropped_zero_deaths;
    } else if (r.deaths.value_or(0) < rules.min_deaths) {
      ++report.dropped_min_deaths;
    } else {
      ++pair_count;
      kept.push_back(r);
    }
  }
  for (const auto& [pair, count] : kept_per_pair) {
    if (count == 0) report.emptied_pairs.push_back(pair);
  }
  report.kept_records = kept.size();
  auto manifest = summarize(kept, rules.excluded_units);
  return {{std::move(kept), std::move(manifest)}, std::move(report)};
}

nlohmann::json to_json(const ExclusionReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [unit, site] : r.emptied_pairs) pairs.push_back({{"unit_id", unit}, {"site", site}});
  return {{"min_deaths", r.min_deaths},
          {"excluded_units", r.excluded_units},
          {"input_records", r.input_records},
          {"kept_records", r.kept_records},
          {"dropped",
           {{"excluded_unit", r.dropped_excluded_unit},
            {"suppressed", r.dropped_suppressed},
            {"zero_deaths", r.dropped_zero_deaths},
            {"min_deaths", r.dropped_min_deaths}}},
          {"emptied_pairs", pairs}};
}

Dataset read_canonical_csv(std::istream& in) {
  text::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != kCanonicalHeader) {
    throw Error(kModule, ErrorKind::format,
                "canonical CSV header mismatch; expected '" + std::string(kCanonicalHeader) + "'");
  }
  std::vector<MortalityRecord> records;
  std::vector<std::string> row_errors;
  while (reader.next(line)) {
    if (text::trim(line).empty()) continue;
    const auto where = "line " + std::to_string(reader.line_number()) + ": ";
    const auto f = text::split_csv(line);
    if (f.size() != 8) {
      row_errors.push_back(where + "expected 8 fields, got " + std::to_string(f.size()));
      continue;
    }
    MortalityRecord r;
    r.unit_id = f[0];
    r.unit_name = f[1];
    r.site = f[2];
    bool ok = true;
    if (auto year = text::parse_int(f[3])) {
      r.year = static_cast<int>(*year);
    } else {
      row_errors.push_back(where + "malformed year '" + f[3] + "'");
      ok = false;
    }
    const std::string flag = text::lower(text::trim(f[7]));
    if (flag == "true" || flag == "1") {
      r.suppressed = true;
    } else if (flag != "false" && flag != "0") {
      row_errors.push_back(where + "malformed suppressed flag '" + f[7] + "'");
      ok = false;
    }
    auto numeric = [&](const std::string& cell, const char* name, auto parse, auto& slot) {
      if (text::trim(cell).empty()) return;
      if (auto v = parse(cell)) {
        slot = *v;
      } else {
        row_errors.push_back(where + "malformed " + name + " '" + cell + "'");
        ok = false;
      }
    };
    numeric(f[4], "deaths", text::parse_int, r.deaths);
    numeric(f[5], "population", text::parse_int, r.population);
    numeric(f[6], "age_adjusted_rate",
            [](std::string_view s) { return text::parse_double(s); }, r.age_adjusted_rate);
    if (!ok) continue;
    if (auto problem = invariant_violation(r); !problem.empty()) {
      row_errors.push_back(where + problem);
      continue;
    }
    records.push_back(std::move(r));
  }
  if (!row_errors.empty()) {
    throw Error(kModule, ErrorKind::format,
                std::to_string(row_errors.size()) + " malformed row(s) in canonical CSV",
                std::move(row_errors));
  }
  check_unique(records);
  auto manifest = summarize(records);
  return {std::move(records), std::move(manifest)};
}

Dataset read_canonical_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_canonical_csv(in);
}

void write_canonical_csv(std::ostream& out, std::span<const MortalityRecord> records) {
  out << kCanonicalHeader << '\n';
  for (const auto& r : records) {
    out << text::join_csv({r.unit_id, r.unit_name, r.site, std::to_string(r.year),
                           r.deaths ? std::to_string(*r.deaths) : "",
                           r.population ? std::to_string(*r.population) : "",
                           r.age_adjusted_rate ? text::format_double(*r.age_adjusted_rate) : "",
                           r.suppressed ? "true" : "false"})
        << '\n';
  }
}

std::string canonical_csv(std::span<const MortalityRecord> records) {
  std::ostringstream out;
  write_canonical_csv(out, records);
  return out.str();
}

}  // namespace arealstat::ingest
