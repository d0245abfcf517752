#include "arealstat/geojson.hpp"

#include <set>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::geo {

namespace {

constexpr const char* kModule = "weights";

Ring parse_ring(const nlohmann::json& coords, const std::string& unit) {
  if (!coords.is_array()) throw Error(kModule, ErrorKind::format, "ring of '" + unit + "' is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw Error(kModule, ErrorKind::format, "malformed coordinate in '" + unit + "'");
    }
    ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const nlohmann::json& coords, const std::string& unit) {
  if (!coords.is_array()) {
    throw Error(kModule, ErrorKind::format, "polygon of '" + unit + "' is not an array");
  }
  Polygon poly;
  for (const auto& ring : coords) poly.push_back(parse_ring(ring, unit));
  return poly;
}

}  // namespace

static FeatureCollection parse_features(const nlohmann::json& doc, std::string_view id_property);

const Feature* FeatureCollection::find(std::string_view unit_id) const {
  for (const auto& f : features) {
    if (f.unit_id == unit_id) return &f;
  }
  return nullptr;
}

std::vector<std::string> FeatureCollection::unit_ids() const {
  std::vector<std::string> ids;
  ids.reserve(features.size());
  for (const auto& f : features) ids.push_back(f.unit_id);
  return ids;
}

static FeatureCollection parse_features(const nlohmann::json& doc, std::string_view id_property) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    throw Error(kModule, ErrorKind::format, "expected a GeoJSON FeatureCollection");
  }
  FeatureCollection fc;
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& jf : doc["features"]) {
    const std::string where = "feature #" + std::to_string(index++);
    const auto props = jf.contains("properties") ? jf["properties"] : nlohmann::json();
    const std::string key(id_property);
    if (!props.is_object() || !props.contains(key) || props[key].is_null()) {
      throw Error(kModule, ErrorKind::format, where + " has no '" + key + "' property");
    }
    Feature f;
    const auto& id = props[key];
    if (id.is_string()) {
      f.unit_id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      f.unit_id = std::to_string(id.get<long long>());
    } else {
      throw Error(kModule, ErrorKind::format, where + " has a non-string '" + key + "'");
    }
    if (!seen.insert(f.unit_id).second) {
      throw Error(kModule, ErrorKind::format, "duplicate unit id '" + f.unit_id + "'");
    }
    const auto& geom = jf.contains("geometry") ? jf["geometry"] : nlohmann::json();
    const std::string type = geom.is_object() ? geom.value("type", "") : "";
    if (type == "Polygon") {
      f.polygons.push_back(parse_polygon(geom.at("coordinates"), f.unit_id));
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom.at("coordinates")) {
        f.polygons.push_back(parse_polygon(poly, f.unit_id));
      }
    } else {
      throw Error(kModule, ErrorKind::format,
                  "'" + f.unit_id + "' must have Polygon or MultiPolygon geometry");
    }
    f.geometry = geom;
    f.properties = props;
    fc.features.push_back(std::move(f));
  }
  return fc;
}

FeatureCollection parse_feature_collection(const nlohmann::json& doc, std::string_view id_property) {
  try {
    return parse_features(doc, id_property);
  } catch (const nlohmann::json::exception& e) {
    throw Error(kModule, ErrorKind::format, std::string("malformed GeoJSON: ") + e.what());
  }
}

FeatureCollection read_geojson(const std::filesystem::path& path, std::string_view id_property) {
  const auto content = text::read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(kModule, ErrorKind::format, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_feature_collection(doc, id_property);
}

}  // namespace arealstat::geo
