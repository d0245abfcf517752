#include "arealstat/weights.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::weights {

namespace {

constexpr const char* kModule = "weights";

struct GridKey {
  long long x;
  long long y;
  bool operator==(const GridKey&) const = default;
};

struct GridKeyHash {
  std::size_t operator()(const GridKey& k) const noexcept {
    const auto h1 = std::hash<long long>{}(k.x);
    const auto h2 = std::hash<long long>{}(k.y);
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
  }
};

std::vector<std::string> tokens(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void add_island_warnings(NeighborGraph& g) {
  for (auto i : g.islands()) g.warnings.push_back("unit '" + g.unit_ids[i] + "' has no neighbors");
}

}  // namespace

std::optional<std::size_t> NeighborGraph::index_of(const std::string& unit_id) const {
  for (std::size_t i = 0; i < unit_ids.size(); ++i) {
    if (unit_ids[i] == unit_id) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> NeighborGraph::islands() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    if (adjacency[i].empty()) out.push_back(i);
  }
  return out;
}

NeighborGraph NeighborGraph::restrict_to(const std::vector<std::string>& ids) const {
  std::map<std::string, std::size_t> old_index;
  for (std::size_t i = 0; i < unit_ids.size(); ++i) old_index[unit_ids[i]] = i;
  std::vector<std::size_t> new_of_old(unit_ids.size(), SIZE_MAX);
  std::vector<std::string> missing;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto it = old_index.find(ids[k]);
    if (it == old_index.end()) {
      missing.push_back(ids[k]);
    } else {
      new_of_old[it->second] = k;
    }
  }
  if (!missing.empty()) {
    throw Error(kModule, ErrorKind::reference,
                std::to_string(missing.size()) + " analysis unit(s) absent from the neighbor graph",
                missing);
  }
  NeighborGraph g;
  g.unit_ids = ids;
  g.source = source;
  g.adjacency.resize(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (auto j : adjacency[old_index.at(ids[k])]) {
      if (new_of_old[j] != SIZE_MAX) g.adjacency[k].push_back(new_of_old[j]);
    }
    std::sort(g.adjacency[k].begin(), g.adjacency[k].end());
  }
  add_island_warnings(g);
  return g;
}

NeighborGraph queen_contiguity(const geo::FeatureCollection& features,
                               const ContiguityOptions& options) {
  if (!(options.snap_tolerance > 0.0)) {
    throw Error(kModule, ErrorKind::validation, "snap tolerance must be positive");
  }
  const double inv = 1.0 / options.snap_tolerance;
  std::unordered_map<GridKey, std::vector<std::size_t>, GridKeyHash> index;
  for (std::size_t u = 0; u < features.features.size(); ++u) {
    for (const auto& poly : features.features[u].polygons) {
      for (const auto& ring : poly) {
        for (const auto& pt : ring) {
          const GridKey key{std::llround(pt.x * inv), std::llround(pt.y * inv)};
          auto& owners = index[key];
          if (owners.empty() || owners.back() != u) owners.push_back(u);
        }
      }
    }
  }
  std::vector<std::set<std::size_t>> sets(features.features.size());
  for (auto& [key, owners] : index) {
    std::sort(owners.begin(), owners.end());
    owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
    for (std::size_t a = 0; a < owners.size(); ++a) {
      for (std::size_t b = a + 1; b < owners.size(); ++b) {
        sets[owners[a]].insert(owners[b]);
        sets[owners[b]].insert(owners[a]);
      }
    }
  }
  NeighborGraph g;
  g.source = GraphSource::geometry;
  g.unit_ids = features.unit_ids();
  for (auto& s : sets) g.adjacency.emplace_back(s.begin(), s.end());
  add_island_warnings(g);
  return g;
}

NeighborGraph read_gal(std::istream& in) {
  text::LineReader reader(in);
  std::string line;
  auto next_nonblank = [&]() {
    while (reader.next(line)) {
      if (!text::trim(line).empty()) return true;
    }
    return false;
  };
  auto format_error = [&](const std::string& message) {
    return Error(kModule, ErrorKind::format, "GAL line " + std::to_string(reader.line_number()) + ": " + message);
  };
  if (!next_nonblank()) throw Error(kModule, ErrorKind::format, "GAL file is empty");
  const auto head = tokens(line);
  std::optional<std::int64_t> declared;
  if (head.size() == 1) declared = text::parse_int(head[0]);
  if (head.size() >= 2 && head[0] == "0") declared = text::parse_int(head[1]);
  if (!declared || *declared < 0) throw format_error("malformed header '" + line + "'");

  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> listed;
  // An island's neighbor line may be blank or omitted entirely.
  bool pending = false;
  while (pending || next_nonblank()) {
    pending = false;
    const auto unit = tokens(line);
    std::optional<std::int64_t> k;
    if (unit.size() == 2) k = text::parse_int(unit[1]);
    if (!k || *k < 0) throw format_error("expected 'unit_id k', got '" + line + "'");
    ids.push_back(unit[0]);
    std::vector<std::string> neighbors;
    if (*k > 0) {
      if (!reader.next(line)) throw format_error("missing neighbor line for '" + unit[0] + "'");
      neighbors = tokens(line);
    } else if (reader.next(line) && !text::trim(line).empty()) {
      pending = true;
    }
    if (static_cast<std::int64_t>(neighbors.size()) != *k) {
      throw format_error("unit '" + unit[0] + "' declares " + std::to_string(*k) +
                         " neighbors but lists " + std::to_string(neighbors.size()));
    }
    listed.push_back(std::move(neighbors));
  }
  if (static_cast<std::int64_t>(ids.size()) != *declared) {
    throw Error(kModule, ErrorKind::format,
                "GAL header declares " + std::to_string(*declared) + " units but lists " +
                    std::to_string(ids.size()));
  }

  NeighborGraph g;
  g.source = GraphSource::file;
  g.unit_ids = ids;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index.emplace(ids[i], i).second) {
      throw Error(kModule, ErrorKind::format, "GAL lists unit '" + ids[i] + "' twice");
    }
  }
  std::vector<std::set<std::size_t>> sets(ids.size());
  std::vector<std::string> dangling;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (const auto& nb : listed[i]) {
      auto it = index.find(nb);
      if (it == index.end()) {
        dangling.push_back("'" + ids[i] + "' -> '" + nb + "'");
      } else if (it->second == i) {
        g.warnings.push_back("dropped self-neighbor entry for '" + ids[i] + "'");
      } else {
        sets[i].insert(it->second);
      }
    }
  }
  if (!dangling.empty()) {
    throw Error(kModule, ErrorKind::reference,
                std::to_string(dangling.size()) + " neighbor id(s) not declared as units", dangling);
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (auto j : std::vector<std::size_t>(sets[i].begin(), sets[i].end())) {
      if (!sets[j].contains(i)) {
        g.warnings.push_back("asymmetric entry '" + ids[i] + "' -> '" + ids[j] + "' symmetrized");
        sets[j].insert(i);
      }
    }
  }
  for (auto& s : sets) g.adjacency.emplace_back(s.begin(), s.end());
  add_island_warnings(g);
  return g;
}

NeighborGraph read_gal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_gal(in);
}

void write_gal(std::ostream& out, const NeighborGraph& g) {
  out << g.size() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << g.unit_ids[i] << ' ' << g.adjacency[i].size() << '\n';
    for (std::size_t k = 0; k < g.adjacency[i].size(); ++k) {
      if (k) out << ' ';
      out << g.unit_ids[g.adjacency[i][k]];
    }
    out << '\n';
  }
}

std::string_view to_string(WeightsKind kind) noexcept {
  switch (kind) {
    case WeightsKind::binary: return "binary";
    case WeightsKind::row_standardized: return "row_standardized";
    case WeightsKind::star_row_standardized: return "star_row_standardized";
  }
  return "unknown";
}

double SpatialWeights::row_sum(std::size_t i) const {
  double s = 0.0;
  for (const auto& e : rows[i]) s += e.weight;
  return s;
}

double SpatialWeights::weight(std::size_t i, std::size_t j) const {
  const auto& row = rows[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const WeightEntry& e, std::size_t idx) { return e.index < idx; });
  return it != row.end() && it->index == j ? it->weight : 0.0;
}

double SpatialWeights::self_weight(std::size_t i) const { return weight(i, i); }

SpatialWeights SpatialWeights::subset(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> remap(size(), SIZE_MAX);
  for (std::size_t k = 0; k < keep.size(); ++k) remap[keep[k]] = k;
  SpatialWeights out;
  out.kind = kind;
  for (auto old : keep) {
    out.unit_ids.push_back(unit_ids[old]);
    std::vector<WeightEntry> row;
    for (const auto& e : rows[old]) {
      if (remap[e.index] != SIZE_MAX) row.push_back({remap[e.index], e.weight});
    }
    if (row.empty()) out.islands.push_back(out.rows.size());
    out.rows.push_back(std::move(row));
  }
  return out;
}

SpatialWeights binary_weights(const NeighborGraph& graph) {
  SpatialWeights w;
  w.unit_ids = graph.unit_ids;
  w.kind = WeightsKind::binary;
  w.rows.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (auto j : graph.adjacency[i]) w.rows[i].push_back({j, 1.0});
    if (graph.adjacency[i].empty()) w.islands.push_back(i);
  }
  return w;
}

SpatialWeights row_standardize(const NeighborGraph& graph, bool star) {
  SpatialWeights w;
  w.unit_ids = graph.unit_ids;
  w.kind = star ? WeightsKind::star_row_standardized : WeightsKind::row_standardized;
  w.rows.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto& nb = graph.adjacency[i];
    if (nb.empty()) w.islands.push_back(i);
    std::vector<std::size_t> members = nb;
    if (star) members.insert(std::lower_bound(members.begin(), members.end(), i), i);
    if (members.empty()) continue;
    const double share = 1.0 / static_cast<double>(members.size());
    for (auto j : members) w.rows[i].push_back({j, share});
  }
  return w;
}

void write_triples_csv(std::ostream& out, const SpatialWeights& w) {
  out << "i_unit,j_unit,weight\n";
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (const auto& e : w.rows[i]) {
      out << text::join_csv({w.unit_ids[i], w.unit_ids[e.index], text::format_double(e.weight)})
          << '\n';
    }
  }
}

}  // namespace arealstat::weights
