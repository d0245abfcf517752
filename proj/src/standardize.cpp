#include "arealstat/standardize.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::standardize {

namespace {

constexpr const char* kModule = "standardize";
constexpr double kPer = 100000.0;

void check_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(kModule, ErrorKind::validation,
                  "standard population weight " + text::format_double(w) + " outside [0, 1]");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(kModule, ErrorKind::validation,
                "standard population weights sum to " + text::format_double(sum) + ", not 1");
  }
}

}  // namespace

double age_adjusted_rate(std::span<const AgeStratum> strata) {
  if (strata.empty()) throw Error(kModule, ErrorKind::validation, "no age strata");
  std::vector<double> weights;
  weights.reserve(strata.size());
  for (const auto& s : strata) weights.push_back(s.weight);
  check_weights(weights);
  double rate = 0.0;
  for (const auto& s : strata) {
    if (s.population <= 0) {
      throw Error(kModule, ErrorKind::division,
                  "age group '" + s.age_group + "' has non-positive population");
    }
    if (s.deaths < 0) {
      throw Error(kModule, ErrorKind::validation, "age group '" + s.age_group + "' has negative deaths");
    }
    rate += static_cast<double>(s.deaths) / static_cast<double>(s.population) * s.weight;
  }
  return rate * kPer;
}

StandardPopulation us2000_standard_population() {
  static constexpr std::pair<const char*, int> kTable[] = {
      {"00", 13818},    {"01-04", 55317}, {"05-09", 72533}, {"10-14", 73032}, {"15-19", 72169},
      {"20-24", 66478}, {"25-29", 64529}, {"30-34", 71044}, {"35-39", 80762}, {"40-44", 81851},
      {"45-49", 72118}, {"50-54", 62716}, {"55-59", 48454}, {"60-64", 38793}, {"65-69", 34264},
      {"70-74", 31773}, {"75-79", 26999}, {"80-84", 17842}, {"85+", 15508},
  };
  StandardPopulation sp;
  for (const auto& [group, per_million] : kTable) {
    sp.age_groups.emplace_back(group);
    sp.weights.push_back(per_million / 1e6);
  }
  return sp;
}

StandardPopulation read_standard_population(std::istream& in) {
  text::LineReader reader(in);
  std::string line;
  if (!reader.next(line) || text::trim(line) != "age_group,weight") {
    throw Error(kModule, ErrorKind::format, "standard population header must be 'age_group,weight'");
  }
  StandardPopulation sp;
  while (reader.next(line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split_csv(line);
    std::optional<double> w;
    if (f.size() == 2) w = text::parse_double(f[1]);
    if (!w) {
      throw Error(kModule, ErrorKind::format,
                  "line " + std::to_string(reader.line_number()) + ": malformed weight row");
    }
    sp.age_groups.push_back(f[0]);
    sp.weights.push_back(*w);
  }
  if (sp.weights.empty()) throw Error(kModule, ErrorKind::format, "standard population is empty");
  check_weights(sp.weights);
  return sp;
}

StandardPopulation read_standard_population(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_standard_population(in);
}

std::vector<AgeStratum> make_strata(const StandardPopulation& standard,
                                    std::span<const std::int64_t> deaths,
                                    std::span<const std::int64_t> populations) {
  const auto k = standard.weights.size();
  if (deaths.size() != k || populations.size() != k) {
    throw Error(kModule, ErrorKind::validation,
                "expected " + std::to_string(k) + " age groups of deaths and population");
  }
  std::vector<AgeStratum> strata(k);
  for (std::size_t i = 0; i < k; ++i) {
    strata[i] = {standard.age_groups[i], deaths[i], populations[i], standard.weights[i]};
  }
  return strata;
}

std::optional<std::size_t> RateMatrix::site_index(const std::string& site) const {
  for (std::size_t j = 0; j < sites.size(); ++j) {
    if (sites[j] == site) return j;
  }
  return std::nullopt;
}

std::vector<double> RateMatrix::column(std::size_t site) const {
  std::vector<double> out(unit_ids.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(site));
  }
  return out;
}

RateMatrix build_rate_matrix(std::span<const ingest::MortalityRecord> records,
                             const std::vector<std::string>& units,
                             const std::vector<std::string>& sites, ingest::YearRange period,
                             Aggregation aggregation) {
  if (period.empty()) throw Error(kModule, ErrorKind::validation, "empty year range");
  if (units.empty() || sites.empty()) {
    throw Error(kModule, ErrorKind::empty_dataset, "no units or sites to tabulate");
  }
  std::map<std::string, std::size_t> unit_row;
  std::map<std::string, std::size_t> site_col;
  for (std::size_t i = 0; i < units.size(); ++i) unit_row[units[i]] = i;
  for (std::size_t j = 0; j < sites.size(); ++j) site_col[sites[j]] = j;

  const auto n = static_cast<Eigen::Index>(units.size());
  const auto p = static_cast<Eigen::Index>(sites.size());
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(n, p);
  Eigen::MatrixXd denominator = Eigen::MatrixXd::Zero(n, p);
  for (const auto& r : records) {
    if (r.suppressed || !r.age_adjusted_rate || !period.contains(r.year)) continue;
    auto u = unit_row.find(r.unit_id);
    auto s = site_col.find(r.site);
    if (u == unit_row.end() || s == site_col.end()) continue;
    const auto i = static_cast<Eigen::Index>(u->second);
    const auto j = static_cast<Eigen::Index>(s->second);
    const double w = aggregation == Aggregation::population_weighted
                         ? static_cast<double>(r.population.value_or(0))
                         : 1.0;
    numerator(i, j) += w * *r.age_adjusted_rate;
    denominator(i, j) += w;
  }

  std::vector<std::string> gaps;
  RateMatrix m;
  m.unit_ids = units;
  m.sites = sites;
  m.values.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (denominator(i, j) <= 0.0) {
        gaps.push_back("(" + units[static_cast<std::size_t>(i)] + ", " +
                       sites[static_cast<std::size_t>(j)] + ")");
        continue;
      }
      m.values(i, j) = numerator(i, j) / denominator(i, j);
    }
  }
  if (!gaps.empty()) {
    throw Error(kModule, ErrorKind::completeness,
                std::to_string(gaps.size()) + " unit x site cell(s) have no rate in " +
                    std::to_string(period.first) + "-" + std::to_string(period.last),
                std::move(gaps));
  }
  return m;
}

RateMatrix build_rate_matrix(const ingest::Dataset& dataset, ingest::YearRange period,
                             Aggregation aggregation) {
  return build_rate_matrix(dataset.records, dataset.manifest.units, dataset.manifest.sites, period,
                           aggregation);
}

RateMatrix zscore_normalize(const RateMatrix& matrix) {
  const auto n = matrix.values.rows();
  const auto p = matrix.values.cols();
  if (n < 2) throw Error(kModule, ErrorKind::insufficient_data, "z-scores need at least two units");
  RateMatrix z = matrix;
  z.standardized = true;
  z.column_means.resize(p);
  z.column_sds.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto col = matrix.values.col(j);
    const double mean = col.mean();
    const double ss = (col.array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * scale)) {
      throw Error(kModule, ErrorKind::degenerate_column,
                  "site '" + matrix.sites[static_cast<std::size_t>(j)] +
                      "' has zero variance across units");
    }
    z.values.col(j) = (col.array() - mean) / sd;
    z.column_means(j) = mean;
    z.column_sds(j) = sd;
  }
  return z;
}

void write_matrix_csv(std::ostream& out, const RateMatrix& m) {
  std::vector<std::string> header{"unit_id"};
  header.insert(header.end(), m.sites.begin(), m.sites.end());
  out << text::join_csv(header) << '\n';
  for (std::size_t i = 0; i < m.unit_ids.size(); ++i) {
    std::vector<std::string> row{m.unit_ids[i]};
    for (std::size_t j = 0; j < m.sites.size(); ++j) {
      row.push_back(text::format_double(m.values(static_cast<Eigen::Index>(i),
                                                 static_cast<Eigen::Index>(j))));
    }
    out << text::join_csv(row) << '\n';
  }
}

std::string matrix_csv(const RateMatrix& matrix) {
  std::ostringstream out;
  write_matrix_csv(out, matrix);
  return out.str();
}

RateMatrix read_matrix_csv(std::istream& in) {
  text::LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw Error(kModule, ErrorKind::format, "matrix CSV is empty");
  auto header = text::split_csv(line);
  if (header.size() < 2 || header[0] != "unit_id") {
    throw Error(kModule, ErrorKind::format, "matrix CSV must start with 'unit_id' and a site column");
  }
  RateMatrix m;
  m.sites.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (reader.next(line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split_csv(line);
    if (f.size() != header.size()) {
      throw Error(kModule, ErrorKind::format,
                  "line " + std::to_string(reader.line_number()) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    std::vector<double> row;
    for (std::size_t j = 1; j < f.size(); ++j) {
      auto v = text::parse_double(f[j]);
      if (!v || std::isnan(*v)) {
        throw Error(kModule, ErrorKind::format,
                    "line " + std::to_string(reader.line_number()) + ": malformed value '" + f[j] + "'");
      }
      row.push_back(*v);
    }
    m.unit_ids.push_back(f[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(kModule, ErrorKind::empty_dataset, "matrix CSV has no rows");
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.sites.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < m.sites.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

RateMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_matrix_csv(in);
}

}  // namespace arealstat::standardize
