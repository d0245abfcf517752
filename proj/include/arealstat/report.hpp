#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "arealstat/cluster.hpp"
#include "arealstat/geojson.hpp"
#include "arealstat/spatial_stats.hpp"
#include "arealstat/standardize.hpp"

namespace arealstat::report {

enum class LayerKind { clusters, rates, lisa, gistar };

std::string_view to_string(LayerKind kind) noexcept;

/// Result properties for one analysis unit. Every row of a layer must carry
/// the same keys; numbers are rounded to 6 significant digits on emission.
struct UnitProperties {
  std::string unit_id;
  nlohmann::json properties = nlohmann::json::object();
};

std::vector<UnitProperties> cluster_properties(const cluster::ClusterSolution& solution);
std::vector<UnitProperties> rate_properties(const standardize::RateMatrix& raw,
                                            const standardize::RateMatrix& standardized,
                                            std::size_t site);
std::vector<UnitProperties> local_properties(std::span<const spatial::LocalStatResult> results);

struct ChoroplethLayer {
  LayerKind kind = LayerKind::clusters;
  std::optional<std::string> site;
  nlohmann::json collection;
  /// Geometry features with no analysis result; emitted with null properties.
  std::vector<std::string> unmatched_geometry;
};

/// Joins results onto geometry. Geometry is passed through untouched; an
/// analysis unit missing from the geometry is a join error.
ChoroplethLayer emit_choropleth(const geo::FeatureCollection& geometry,
                                std::span<const UnitProperties> rows, LayerKind kind,
                                std::optional<std::string> site = std::nullopt);

std::string dump_layer(const ChoroplethLayer& layer);

struct ClusterProfileTable {
  std::vector<int> clusters;
  std::vector<std::string> sites;
  std::vector<std::size_t> sizes;
  Eigen::MatrixXd means;  // clusters x sites
};

ClusterProfileTable cluster_profile(const standardize::RateMatrix& standardized,
                                    std::span<const std::string> unit_ids, std::span<const int> labels);
ClusterProfileTable cluster_profile(const standardize::RateMatrix& standardized,
                                    const cluster::ClusterSolution& solution);

/// `cluster,size,<site>...`
void write_profile_csv(std::ostream& out, const ClusterProfileTable& table);

/// Lower-case file-name fragment: runs of non-alphanumerics become '_'.
std::string site_slug(std::string_view site);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Gap {
  std::string layer;
  std::string reason;
};

/// Writes a bundle directory. Every file goes through write-temp-then-rename
/// and is hashed for the manifest.
class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  void write(const std::string& name, std::string_view content);
  void add_input(const std::filesystem::path& path);
  void add_gap(std::string layer, std::string reason);
  const std::vector<Gap>& gaps() const noexcept { return gaps_; }
  const std::vector<std::pair<std::string, std::string>>& outputs() const noexcept { return outputs_; }

  nlohmann::json manifest(const nlohmann::json& config, std::uint64_t seed) const;
  void write_manifest(const nlohmann::json& config, std::uint64_t seed);

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> inputs_;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs_;  // name, sha256
  std::vector<Gap> gaps_;
};

}  // namespace arealstat::report
