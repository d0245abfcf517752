#pragma once

// Test-only geometry and graph builders. Rook lattices are not part of the
// library (it derives queen contiguity from polygons only).

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "arealstat/geojson.hpp"
#include "arealstat/weights.hpp"

namespace arealstat::testing {

inline std::string cell_id(int r, int c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%02dc%02d", r, c);
  return buf;
}

/// Row-major ids; neighbors share an edge.
inline weights::NeighborGraph rook_lattice(int rows, int cols) {
  weights::NeighborGraph g;
  g.source = weights::GraphSource::file;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      g.unit_ids.push_back(cell_id(r, c));
      std::vector<std::size_t> nb;
      const auto at = [&](int rr, int cc) { return static_cast<std::size_t>(rr * cols + cc); };
      if (r > 0) nb.push_back(at(r - 1, c));
      if (c > 0) nb.push_back(at(r, c - 1));
      if (c + 1 < cols) nb.push_back(at(r, c + 1));
      if (r + 1 < rows) nb.push_back(at(r + 1, c));
      g.adjacency.push_back(nb);
    }
  }
  return g;
}

inline nlohmann::json square_feature(const std::string& id, double x, double y, double size = 1.0) {
  nlohmann::json ring = {{x, y}, {x + size, y}, {x + size, y + size}, {x, y + size}, {x, y}};
  return {{"type", "Feature"},
          {"properties", {{"unit_id", id}}},
          {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}};
}

inline geo::FeatureCollection squares(const std::vector<nlohmann::json>& features) {
  return geo::parse_feature_collection({{"type", "FeatureCollection"}, {"features", features}});
}

}  // namespace arealstat::testing
