#include "arealstat/pipeline.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "arealstat/cluster.hpp"
#include "arealstat/error.hpp"
#include "arealstat/ingest.hpp"
#include "arealstat/parallel.hpp"
#include "arealstat/permutation.hpp"
#include "arealstat/spatial_stats.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::cli {

namespace {

constexpr const char* kModule = "cli";

constexpr const char* kRecordsFile = "records.csv";
constexpr const char* kRatesFile = "rate_matrix.csv";
constexpr const char* kGalFile = "weights.gal";

// Stream tags keep the oracle draws of different stages apart.
constexpr std::uint64_t kMoranStream = 1;
constexpr std::uint64_t kLisaStream = 2;
constexpr std::uint64_t kGistarStream = 3;

template <class Write>
std::string render(Write write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

ingest::Dataset read_records(const RunConfig& config) {
  if (config.records.empty()) {
    throw Error(kModule, ErrorKind::config, "no records file given (--records)");
  }
  auto format = config.records_format;
  if (format == "auto") {
    std::ifstream in(config.records);
    std::string first;
    std::getline(in, first);
    if (first.rfind("\xEF\xBB\xBF", 0) == 0) first.erase(0, 3);
    if (!first.empty() && first.back() == '\r') first.pop_back();
    format = first == ingest::kCanonicalHeader ? "canonical" : "wonder";
  }
  return format == "canonical" ? ingest::read_canonical_csv(config.records)
                               : ingest::parse_wonder_export(config.records);
}

// Runs fn(site) for every site, up to `jobs` at a time. Failures are kept
// per site so the others still complete.
template <class Result, class Fn>
std::vector<std::optional<Result>> per_site(std::size_t sites, unsigned jobs,
                                            std::vector<std::string>& errors, Fn fn) {
  std::vector<std::optional<Result>> results(sites);
  errors.assign(sites, {});
  parallel_for(sites, jobs, [&](std::size_t s) {
    try {
      results[s] = fn(s);
    } catch (const std::exception& e) {
      errors[s] = e.what();
    }
  });
  return results;
}

struct SiteInput {
  std::vector<double> values;
  weights::SpatialWeights weights;
};

// Island units leave the oracle's permutation set, as they leave the
// analytic statistics.
SiteInput without_islands(std::vector<double> values, const weights::SpatialWeights& w) {
  if (w.islands.empty()) return {std::move(values), w};
  std::vector<std::size_t> keep;
  std::vector<double> kept;
  const std::set<std::size_t> islands(w.islands.begin(), w.islands.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (islands.contains(i)) continue;
    keep.push_back(i);
    kept.push_back(values[i]);
  }
  return {std::move(kept), w.subset(keep)};
}

void write_oracle_local(std::ostream& out, const std::vector<spatial::LocalStatResult>& results,
                        const SiteInput& input, const std::vector<double>& perm) {
  out << "unit_id,p_analytic,p_permutation\n";
  std::size_t k = 0;
  for (const auto& r : results) {
    const bool kept = k < input.weights.size() && input.weights.unit_ids[k] == r.unit_id;
    out << text::join_csv({r.unit_id, text::format_double(r.p_two_sided),
                           kept ? text::format_double(perm[k]) : "NA"})
        << '\n';
    if (kept) ++k;
  }
}

}  // namespace

Pipeline::Pipeline(RunConfig config, std::ostream& log)
    : config_(std::move(config)), log_(log), bundle_(config_.out) {}

void Pipeline::log(const std::string& line) { log_ << "[arealstat] " << stage_ << ": " << line << '\n'; }

void Pipeline::begin(const std::string& stage) {
  stage_ = stage;
  log("start");
}

std::filesystem::path Pipeline::upstream(const std::string& name) const {
  auto path = config_.out / name;
  if (!std::filesystem::exists(path)) {
    throw Error(kModule, ErrorKind::dependency,
                "stage '" + stage_ + "' needs upstream artifact '" + name + "'", {path.string()});
  }
  return path;
}

standardize::RateMatrix Pipeline::load_rates() const {
  return standardize::read_matrix_csv(config_.values.empty() ? upstream(kRatesFile) : config_.values);
}

weights::NeighborGraph Pipeline::load_graph(const standardize::RateMatrix& rates) const {
  const auto path = config_.gal.empty() ? upstream(kGalFile) : config_.gal;
  return weights::read_gal(path).restrict_to(rates.unit_ids);
}

const geo::FeatureCollection* Pipeline::geometry() {
  if (config_.geometry.empty()) return nullptr;
  if (!geometry_) geometry_ = geo::read_geojson(config_.geometry, config_.id_property);
  return &*geometry_;
}

void Pipeline::parse() {
  begin("parse");
  auto dataset = read_records(config_);
  bundle_.add_input(config_.records);
  log("read " + std::to_string(dataset.records.size()) + " records");

  ingest::InclusionRules rules{config_.min_deaths, config_.exclude};
  auto filtered = ingest::apply_inclusion_rules(dataset.records, rules);
  log("kept " + std::to_string(filtered.report.kept_records) + " of " +
      std::to_string(filtered.report.input_records) + " records");
  if (filtered.dataset.records.empty()) {
    throw Error("ingest", ErrorKind::empty_dataset, "no records survive the inclusion rules");
  }

  const auto period = parse_period(config_.period).value_or(filtered.dataset.manifest.years);
  const auto rates = standardize::build_rate_matrix(filtered.dataset, period, aggregation_of(config_));
  bundle_.write(kRecordsFile, ingest::canonical_csv(filtered.dataset.records));
  bundle_.write("exclusion_report.json", ingest::to_json(filtered.report).dump(2) + "\n");
  bundle_.write("dataset_manifest.json", ingest::to_json(filtered.dataset.manifest).dump(2) + "\n");
  bundle_.write(kRatesFile, standardize::matrix_csv(rates));
  bundle_.write("rate_matrix_z.csv", standardize::matrix_csv(standardize::zscore_normalize(rates)));
}

void Pipeline::weights() {
  begin("weights");
  const auto rates = load_rates();
  weights::NeighborGraph graph;
  if (!config_.gal.empty()) {
    graph = weights::read_gal(config_.gal);
    bundle_.add_input(config_.gal);
  } else if (const auto* fc = geometry()) {
    graph = weights::queen_contiguity(*fc, {config_.snap_tolerance});
    bundle_.add_input(config_.geometry);
  } else {
    throw Error(kModule, ErrorKind::config, "weights need --geometry or --gal");
  }
  graph = graph.restrict_to(rates.unit_ids);
  for (const auto& w : graph.warnings) log("warning: " + w);
  bundle_.write(kGalFile, render([&](std::ostream& o) { weights::write_gal(o, graph); }));
  bundle_.write("weights_row.csv", render([&](std::ostream& o) {
                  weights::write_triples_csv(o, weights::row_standardize(graph, false));
                }));
  bundle_.write("weights_gistar.csv", render([&](std::ostream& o) {
                  weights::write_triples_csv(o, weights::row_standardize(graph, config_.star_gistar));
                }));
}

void Pipeline::cluster() {
  begin("cluster");
  const auto z = standardize::zscore_normalize(load_rates());
  const auto cov = cluster::estimate_covariance(z, {config_.ridge_lambda, config_.cond_max});
  if (cov.ridge > 0.0) log("covariance ridge " + text::format_double(cov.ridge) + " added");
  const auto distances = cluster::mahalanobis_matrix(z, cov);
  const auto merges = cluster::ward_cluster(distances);
  const auto solution = cluster::silhouette_select(distances, merges, {config_.k_min, config_.k_max});
  log("chose k = " + std::to_string(solution.chosen_k));

  bundle_.write("cluster_merges.csv", render([&](std::ostream& o) { cluster::write_merges_csv(o, merges); }));
  bundle_.write("silhouette.csv", render([&](std::ostream& o) { cluster::write_silhouette_csv(o, solution); }));
  bundle_.write("cluster_assignments.csv",
                render([&](std::ostream& o) { cluster::write_assignments_csv(o, solution); }));
  const auto profile = report::cluster_profile(z, solution);
  bundle_.write("cluster_profile.csv", render([&](std::ostream& o) { report::write_profile_csv(o, profile); }));
  if (const auto* fc = geometry()) {
    const auto rows = report::cluster_properties(solution);
    bundle_.write("clusters.geojson",
                  report::dump_layer(report::emit_choropleth(*fc, rows, report::LayerKind::clusters)));
  }
}

void Pipeline::moran() {
  begin("moran");
  const auto rates = load_rates();
  const auto graph = load_graph(rates);
  const auto w = weights::row_standardize(graph, false);
  const spatial::GlobalMoranOptions options{variance_of(config_), island_policy_of(config_)};

  struct SiteMoran {
    spatial::GlobalMoranResult result;
    double p_perm = 0.0;
  };
  std::vector<std::string> errors;
  const auto results = per_site<SiteMoran>(rates.site_count(), config_.jobs, errors, [&](std::size_t s) {
    const auto values = rates.column(s);
    SiteMoran out{spatial::global_moran(values, w, options, rates.sites[s])};
    if (config_.oracle) {
      const auto input = without_islands(values, w);
      spatial::PermutationOptions perm{config_.n_perm, spatial::derive_seed(config_.seed, kMoranStream), 1};
      perm.seed = spatial::derive_seed(perm.seed, s);
      out.p_perm = spatial::permutation_pvalue(spatial::moran_deviation_statistic(input.weights),
                                               input.values, perm);
    }
    return out;
  });

  std::vector<spatial::GlobalMoranResult> rows;
  std::string oracle = "site,p_analytic,p_permutation\n";
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s]) {
      bundle_.add_gap("moran_summary.csv#" + rates.sites[s], errors[s]);
      log("site '" + rates.sites[s] + "' failed: " + errors[s]);
      continue;
    }
    const auto& r = results[s]->result;
    if (r.outside_soft_bounds) log("site '" + r.site + "': |I| above 1.5");
    if (!r.dropped_units.empty()) log("site '" + r.site + "': dropped islands");
    rows.push_back(r);
    oracle += text::join_csv({r.site, text::format_double(r.p_two_sided), text::format_double(results[s]->p_perm)}) + "\n";
  }
  bundle_.write("moran_summary.csv", render([&](std::ostream& o) { spatial::write_global_csv(o, rows); }));
  if (config_.oracle) bundle_.write("moran_oracle.csv", oracle);

  if (const auto* fc = geometry()) {
    const auto z = standardize::zscore_normalize(rates);
    for (std::size_t s = 0; s < rates.site_count(); ++s) {
      const auto rows_s = report::rate_properties(rates, z, s);
      bundle_.write("rates_" + report::site_slug(rates.sites[s]) + ".geojson",
                    report::dump_layer(report::emit_choropleth(*fc, rows_s, report::LayerKind::rates, rates.sites[s])));
    }
  }
}

void Pipeline::lisa() {
  begin("lisa");
  const auto rates = load_rates();
  const auto w = weights::row_standardize(load_graph(rates), false);
  const spatial::LocalOptions options{config_.alpha, config_.fdr, island_policy_of(config_)};

  struct SiteLocal {
    std::vector<spatial::LocalStatResult> results;
    std::string oracle;
  };
  std::vector<std::string> errors;
  const auto results = per_site<SiteLocal>(rates.site_count(), config_.jobs, errors, [&](std::size_t s) {
    const auto values = rates.column(s);
    SiteLocal out{spatial::local_moran(values, w, options, rates.sites[s]), {}};
    if (config_.oracle) {
      const auto input = without_islands(values, w);
      spatial::PermutationOptions perm{config_.n_perm, spatial::derive_seed(config_.seed, kLisaStream), 1};
      perm.seed = spatial::derive_seed(perm.seed, s);
      const auto p = spatial::conditional_permutation_pvalues(
          spatial::local_moran_z_statistic(input.values, input.weights), input.values, perm);
      out.oracle = render([&](std::ostream& o) { write_oracle_local(o, out.results, input, p); });
    }
    return out;
  });

  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto slug = report::site_slug(rates.sites[s]);
    if (!results[s]) {
      bundle_.add_gap("lisa_" + slug + ".csv", errors[s]);
      log("site '" + rates.sites[s] + "' failed: " + errors[s]);
      continue;
    }
    const auto& r = results[s]->results;
    bundle_.write("lisa_" + slug + ".csv", render([&](std::ostream& o) { spatial::write_local_csv(o, r); }));
    if (config_.oracle) bundle_.write("lisa_" + slug + "_oracle.csv", results[s]->oracle);
    if (const auto* fc = geometry()) {
      bundle_.write("lisa_" + slug + ".geojson",
                    report::dump_layer(report::emit_choropleth(*fc, report::local_properties(r),
                                                               report::LayerKind::lisa, rates.sites[s])));
    }
  }
}

void Pipeline::gistar() {
  begin("gistar");
  const auto rates = load_rates();
  const auto w = weights::row_standardize(load_graph(rates), config_.star_gistar);
  const spatial::LocalOptions options{config_.alpha, config_.fdr, island_policy_of(config_)};

  struct SiteLocal {
    std::vector<spatial::LocalStatResult> results;
    std::string oracle;
  };
  std::vector<std::string> errors;
  const auto results = per_site<SiteLocal>(rates.site_count(), config_.jobs, errors, [&](std::size_t s) {
    const auto values = rates.column(s);
    SiteLocal out{spatial::getis_ord_gistar(values, w, options, rates.sites[s]), {}};
    if (config_.oracle) {
      const auto input = without_islands(values, w);
      spatial::PermutationOptions perm{config_.n_perm, spatial::derive_seed(config_.seed, kGistarStream), 1};
      perm.seed = spatial::derive_seed(perm.seed, s);
      const auto p = spatial::conditional_permutation_pvalues(
          spatial::gistar_statistic(input.values, input.weights), input.values, perm);
      out.oracle = render([&](std::ostream& o) { write_oracle_local(o, out.results, input, p); });
    }
    return out;
  });

  std::vector<std::vector<spatial::LocalStatResult>> completed;
  for (std::size_t s = 0; s < results.size(); ++s) {
    const auto slug = report::site_slug(rates.sites[s]);
    if (!results[s]) {
      bundle_.add_gap("gistar_" + slug + ".csv", errors[s]);
      log("site '" + rates.sites[s] + "' failed: " + errors[s]);
      continue;
    }
    const auto& r = results[s]->results;
    completed.push_back(r);
    bundle_.write("gistar_" + slug + ".csv", render([&](std::ostream& o) { spatial::write_local_csv(o, r); }));
    if (config_.oracle) bundle_.write("gistar_" + slug + "_oracle.csv", results[s]->oracle);
    if (const auto* fc = geometry()) {
      bundle_.write("gistar_" + slug + ".geojson",
                    report::dump_layer(report::emit_choropleth(*fc, report::local_properties(r),
                                                               report::LayerKind::gistar, rates.sites[s])));
    }
  }
  if (completed.empty()) {
    bundle_.add_gap("hotspot_tally.csv", "no site produced G_i* results");
    return;
  }
  if (completed.size() < rates.site_count()) {
    bundle_.add_gap("hotspot_tally.csv", "tally covers " + std::to_string(completed.size()) + " of " +
                                             std::to_string(rates.site_count()) + " sites");
  }
  const auto tally = spatial::hotspot_frequency(completed);
  bundle_.write("hotspot_tally.csv", render([&](std::ostream& o) { spatial::write_tally_csv(o, tally.counts); }));
}

void Pipeline::run() {
  parse();
  const auto attempt = [&](const char* name, void (Pipeline::*stage)(), std::vector<std::string> layers) {
    try {
      (this->*stage)();
      return true;
    } catch (const Error& e) {
      failures_.push_back({name, e.module(), std::string(to_string(e.kind())), e.message(), e.details()});
      for (auto& layer : layers) bundle_.add_gap(std::move(layer), e.what());
      log(std::string("failed: ") + e.what());
      return false;
    }
  };
  const bool have_weights = attempt("weights", &Pipeline::weights, {kGalFile});
  attempt("cluster", &Pipeline::cluster, {"cluster_assignments.csv", "cluster_profile.csv", "clusters.geojson"});
  if (have_weights) {
    attempt("moran", &Pipeline::moran, {"moran_summary.csv"});
    attempt("lisa", &Pipeline::lisa, {"lisa_*"});
    attempt("gistar", &Pipeline::gistar, {"gistar_*", "hotspot_tally.csv"});
  } else {
    for (const char* layer : {"moran_summary.csv", "lisa_*", "gistar_*", "hotspot_tally.csv"}) {
      bundle_.add_gap(layer, "weights stage failed");
    }
  }
  stage_ = "report";
  bundle_.write_manifest(to_json(config_), config_.seed);
  log(bundle_.gaps().empty() ? "bundle complete" : std::to_string(bundle_.gaps().size()) + " gap(s) recorded");
}

}  // namespace arealstat::cli
