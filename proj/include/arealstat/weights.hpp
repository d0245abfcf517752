#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arealstat/geojson.hpp"

namespace arealstat::weights {

enum class GraphSource { geometry, file };

/// Symmetric, irreflexive neighbor lists. `adjacency[i]` is sorted.
struct NeighborGraph {
  std::vector<std::string> unit_ids;
  std::vector<std::vector<std::size_t>> adjacency;
  GraphSource source = GraphSource::geometry;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return unit_ids.size(); }
  std::optional<std::size_t> index_of(const std::string& unit_id) const;
  std::vector<std::size_t> islands() const;
  bool operator==(const NeighborGraph& other) const {
    return unit_ids == other.unit_ids && adjacency == other.adjacency;
  }

  /// Subgraph over `ids`, in that order. Edges to units outside `ids` are
  /// dropped; an id missing from the graph is a reference error.
  NeighborGraph restrict_to(const std::vector<std::string>& ids) const;
};

struct ContiguityOptions {
  double snap_tolerance = 1e-6;
};

/// Queen contiguity: two units are neighbors when they share at least one
/// vertex after snapping every coordinate to a grid of `snap_tolerance`.
NeighborGraph queen_contiguity(const geo::FeatureCollection& features,
                               const ContiguityOptions& options = {});

/// GAL neighbor list: a header `n` (or the 4-token `0 n name key` form), then
/// per unit a line `unit_id k` followed by a line with k neighbor ids.
/// Asymmetric entries are symmetrized with a warning.
NeighborGraph read_gal(std::istream& in);
NeighborGraph read_gal(const std::filesystem::path& path);
void write_gal(std::ostream& out, const NeighborGraph& graph);

enum class WeightsKind { binary, row_standardized, star_row_standardized };

std::string_view to_string(WeightsKind kind) noexcept;

struct WeightEntry {
  std::size_t index = 0;
  double weight = 0.0;
};

/// Sparse weights, one sorted row per unit.
struct SpatialWeights {
  std::vector<std::string> unit_ids;
  std::vector<std::vector<WeightEntry>> rows;
  WeightsKind kind = WeightsKind::binary;
  /// Units without neighbors; their rows are empty.
  std::vector<std::size_t> islands;

  std::size_t size() const noexcept { return unit_ids.size(); }
  double row_sum(std::size_t i) const;
  double self_weight(std::size_t i) const;
  double weight(std::size_t i, std::size_t j) const;

  /// Keeps units `keep` (ascending indices) and re-indexes the rows.
  SpatialWeights subset(std::span<const std::size_t> keep) const;
};

SpatialWeights binary_weights(const NeighborGraph& graph);

/// star = false: w_ij = 1/n_i over the n_i neighbors.
/// star = true: the unit joins its own neighbor set, w_ii = w_ij = 1/(n_i + 1).
SpatialWeights row_standardize(const NeighborGraph& graph, bool star);

/// Sparse triples CSV `i_unit,j_unit,weight`.
void write_triples_csv(std::ostream& out, const SpatialWeights& weights);

}  // namespace arealstat::weights
