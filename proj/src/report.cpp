#include "arealstat/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::report {

namespace {

constexpr const char* kModule = "report";

nlohmann::json display_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return text::round_significant(v, 6);
}

nlohmann::json display_properties(const nlohmann::json& props) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : props.items()) {
    out[key] = value.is_number_float() ? display_number(value.get<double>()) : value;
  }
  return out;
}

std::set<std::string> keys_of(const nlohmann::json& props) {
  std::set<std::string> keys;
  for (const auto& [key, value] : props.items()) keys.insert(key);
  return keys;
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::clusters: return "clusters";
    case LayerKind::rates: return "rates";
    case LayerKind::lisa: return "lisa";
    case LayerKind::gistar: return "gistar";
  }
  return "clusters";
}

std::vector<UnitProperties> cluster_properties(const cluster::ClusterSolution& solution) {
  std::vector<UnitProperties> rows;
  for (std::size_t i = 0; i < solution.unit_ids.size(); ++i) {
    rows.push_back({solution.unit_ids[i], {{"cluster", solution.assignments.at(i)}}});
  }
  return rows;
}

std::vector<UnitProperties> rate_properties(const standardize::RateMatrix& raw,
                                            const standardize::RateMatrix& standardized,
                                            std::size_t site) {
  if (raw.unit_ids != standardized.unit_ids || site >= raw.site_count()) {
    throw Error(kModule, ErrorKind::validation, "raw and standardized matrices do not line up");
  }
  std::vector<UnitProperties> rows;
  for (std::size_t i = 0; i < raw.unit_count(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto c = static_cast<Eigen::Index>(site);
    rows.push_back({raw.unit_ids[i],
                    {{"rate", raw.values(r, c)}, {"z_rate", standardized.values(r, c)}}});
  }
  return rows;
}

std::vector<UnitProperties> local_properties(std::span<const spatial::LocalStatResult> results) {
  std::vector<UnitProperties> rows;
  for (const auto& r : results) {
    rows.push_back({r.unit_id,
                    {{"statistic", r.statistic},
                     {"z", r.z},
                     {"p", r.p_two_sided},
                     {"class", std::string(spatial::to_string(r.cls))}}});
  }
  return rows;
}

ChoroplethLayer emit_choropleth(const geo::FeatureCollection& geometry,
                                std::span<const UnitProperties> rows, LayerKind kind,
                                std::optional<std::string> site) {
  std::map<std::string, const UnitProperties*> by_unit;
  std::set<std::string> keys;
  std::vector<std::string> missing;
  for (const auto& row : rows) {
    if (!by_unit.emplace(row.unit_id, &row).second) {
      throw Error(kModule, ErrorKind::validation, "unit '" + row.unit_id + "' appears twice in a layer");
    }
    const auto row_keys = keys_of(row.properties);
    if (by_unit.size() == 1) {
      keys = row_keys;
    } else if (row_keys != keys) {
      throw Error(kModule, ErrorKind::validation,
                  "unit '" + row.unit_id + "' carries a different property set");
    }
    if (geometry.find(row.unit_id) == nullptr) missing.push_back(row.unit_id);
  }
  if (!missing.empty()) {
    throw Error(kModule, ErrorKind::join,
                std::to_string(missing.size()) + " analysis unit(s) have no geometry", missing);
  }

  ChoroplethLayer layer;
  layer.kind = kind;
  layer.site = std::move(site);
  auto features = nlohmann::json::array();
  for (const auto& f : geometry.features) {
    nlohmann::json props;
    const auto it = by_unit.find(f.unit_id);
    if (it != by_unit.end()) {
      props = display_properties(it->second->properties);
    } else {
      props = nlohmann::json::object();
      for (const auto& key : keys) props[key] = nullptr;
      layer.unmatched_geometry.push_back(f.unit_id);
    }
    props["unit_id"] = f.unit_id;
    features.push_back({{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", f.geometry}});
  }
  layer.collection = {{"type", "FeatureCollection"}, {"layer", to_string(kind)}, {"features", features}};
  if (layer.site) layer.collection["site"] = *layer.site;
  return layer;
}

std::string dump_layer(const ChoroplethLayer& layer) { return layer.collection.dump() + "\n"; }

ClusterProfileTable cluster_profile(const standardize::RateMatrix& standardized,
                                    std::span<const std::string> unit_ids, std::span<const int> labels) {
  if (unit_ids.size() != labels.size()) {
    throw Error(kModule, ErrorKind::validation, "assignment ids and labels differ in length");
  }
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < standardized.unit_count(); ++i) row_of[standardized.unit_ids[i]] = i;

  std::vector<std::string> unknown;
  std::set<std::string> seen;
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t k = 0; k < unit_ids.size(); ++k) {
    const auto it = row_of.find(unit_ids[k]);
    if (it == row_of.end()) {
      unknown.push_back(unit_ids[k]);
      continue;
    }
    seen.insert(unit_ids[k]);
    members[labels[k]].push_back(it->second);
  }
  if (!unknown.empty()) {
    throw Error(kModule, ErrorKind::validation, "assignments name units outside the matrix", unknown);
  }
  if (seen.size() != standardized.unit_count()) {
    std::vector<std::string> uncovered;
    for (const auto& id : standardized.unit_ids) {
      if (!seen.contains(id)) uncovered.push_back(id);
    }
    throw Error(kModule, ErrorKind::validation, "assignments do not cover every matrix unit", uncovered);
  }

  ClusterProfileTable table;
  table.sites = standardized.sites;
  table.means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(members.size()),
                                      static_cast<Eigen::Index>(standardized.site_count()));
  Eigen::Index r = 0;
  for (const auto& [label, rows] : members) {
    table.clusters.push_back(label);
    table.sizes.push_back(rows.size());
    for (auto row : rows) table.means.row(r) += standardized.values.row(static_cast<Eigen::Index>(row));
    table.means.row(r) /= static_cast<double>(rows.size());
    ++r;
  }
  return table;
}

ClusterProfileTable cluster_profile(const standardize::RateMatrix& standardized,
                                    const cluster::ClusterSolution& solution) {
  return cluster_profile(standardized, solution.unit_ids, solution.assignments);
}

void write_profile_csv(std::ostream& out, const ClusterProfileTable& table) {
  std::vector<std::string> header{"cluster", "size"};
  header.insert(header.end(), table.sites.begin(), table.sites.end());
  out << text::join_csv(header) << '\n';
  for (std::size_t i = 0; i < table.clusters.size(); ++i) {
    std::vector<std::string> row{std::to_string(table.clusters[i]), std::to_string(table.sizes[i])};
    for (Eigen::Index j = 0; j < table.means.cols(); ++j) {
      row.push_back(text::format_double(table.means(static_cast<Eigen::Index>(i), j)));
    }
    out << text::join_csv(row) << '\n';
  }
}

std::string site_slug(std::string_view site) {
  std::string slug;
  bool pending = false;
  for (unsigned char c : site) {
    if (std::isalnum(c)) {
      if (pending && !slug.empty()) slug += '_';
      pending = false;
      slug += static_cast<char>(std::tolower(c));
    } else {
      pending = true;
    }
  }
  return slug.empty() ? "site" : slug;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(kModule, ErrorKind::io, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(text::read_file(path)); }

BundleWriter::BundleWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(kModule, ErrorKind::io, "cannot create '" + dir_.string() + "': " + ec.message());
}

void BundleWriter::write(const std::string& name, std::string_view content) {
  text::write_file_atomic(dir_ / name, content);
  const auto hash = sha256_hex(content);
  const auto it = std::find_if(outputs_.begin(), outputs_.end(), [&](const auto& o) { return o.first == name; });
  if (it != outputs_.end()) {
    it->second = hash;
  } else {
    outputs_.emplace_back(name, hash);
  }
}

void BundleWriter::add_input(const std::filesystem::path& path) {
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void BundleWriter::add_gap(std::string layer, std::string reason) {
  gaps_.push_back({std::move(layer), std::move(reason)});
}

nlohmann::json BundleWriter::manifest(const nlohmann::json& config, std::uint64_t seed) const {
  auto inputs = nlohmann::json::array();
  for (const auto& [path, hash] : inputs_) inputs.push_back({{"path", path}, {"sha256", hash}});
  auto outputs = nlohmann::json::array();
  auto sorted = outputs_;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [name, hash] : sorted) outputs.push_back({{"file", name}, {"sha256", hash}});
  auto gaps = nlohmann::json::array();
  for (const auto& g : gaps_) gaps.push_back({{"layer", g.layer}, {"reason", g.reason}});
  return {{"tool", "arealstat"},
          {"version", AREALSTAT_VERSION},
          {"seed", seed},
          {"config", config},
          {"inputs", inputs},
          {"outputs", outputs},
          {"gaps", gaps},
          {"complete", gaps_.empty()}};
}

void BundleWriter::write_manifest(const nlohmann::json& config, std::uint64_t seed) {
  text::write_file_atomic(dir_ / "manifest.json", manifest(config, seed).dump(2) + "\n");
}

}  // namespace arealstat::report
