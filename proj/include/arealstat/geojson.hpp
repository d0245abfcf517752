#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace arealstat::geo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Ring = std::vector<Point>;
using Polygon = std::vector<Ring>;  // outer ring first, then holes

/// A Polygon or MultiPolygon feature. `geometry` and `properties` keep the
/// original JSON so outputs can pass geometry through untouched.
struct Feature {
  std::string unit_id;
  std::vector<Polygon> polygons;
  nlohmann::json geometry;
  nlohmann::json properties;
};

struct FeatureCollection {
  std::vector<Feature> features;

  const Feature* find(std::string_view unit_id) const;
  std::vector<std::string> unit_ids() const;
};

/// Features must carry `id_property` (string or integer) and a Polygon or
/// MultiPolygon geometry; unit ids must be unique.
FeatureCollection parse_feature_collection(const nlohmann::json& doc,
                                           std::string_view id_property = "unit_id");
FeatureCollection read_geojson(const std::filesystem::path& path,
                               std::string_view id_property = "unit_id");

}  // namespace arealstat::geo
