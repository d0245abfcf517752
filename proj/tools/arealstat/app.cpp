#include "arealstat/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include "arealstat/config.hpp"
#include "arealstat/error.hpp"
#include "arealstat/pipeline.hpp"

namespace arealstat::cli {

namespace {

void report_error(std::ostream& err, const std::string& stage, const std::string& module,
                  const std::string& kind, const std::string& message,
                  const std::vector<std::string>& details) {
  nlohmann::json summary = {{"error",
                             {{"stage", stage},
                              {"module", module},
                              {"kind", kind},
                              {"message", message},
                              {"details", details}}}};
  err << summary.dump() << '\n';
}

// Option name (as echoed in errors) -> CLI11 option.
using OptionTable = std::map<std::string, CLI::Option*>;

OptionTable add_options(CLI::App& app, RunConfig& c, std::string& profile) {
  OptionTable t;
  t["records"] = app.add_option("--records", c.records, "Mortality export (WONDER text or canonical CSV)");
  t["records_format"] = app.add_option("--records-format", c.records_format, "auto, wonder or canonical");
  t["geometry"] = app.add_option("--geometry", c.geometry, "Polygon GeoJSON keyed by --id-property");
  t["gal"] = app.add_option("--gal", c.gal, "GAL neighbor file; replaces geometry-derived contiguity");
  t["values"] = app.add_option("--values", c.values, "Rate matrix CSV for the analysis stages");
  t["id_property"] = app.add_option("--id-property", c.id_property, "GeoJSON property holding the unit id");
  t["period"] = app.add_option("--period", c.period, "YYYY or YYYY-YYYY (default: all years)");
  t["min_deaths"] = app.add_option("--min-deaths", c.min_deaths, "Drop records with fewer deaths");
  t["exclude"] = app.add_option("--exclude", c.exclude, "Units removed before analysis")->delimiter(',');
  t["aggregation"] = app.add_option("--aggregation", c.aggregation, "mean or population_weighted");
  t["snap_tolerance"] = app.add_option("--snap-tolerance", c.snap_tolerance, "Vertex snapping grid");
  t["ridge_lambda"] = app.add_option("--ridge-lambda", c.ridge_lambda, "Covariance ridge factor");
  t["cond_max"] = app.add_option("--cond-max", c.cond_max, "Condition number that triggers the ridge");
  t["k_min"] = app.add_option("--k-min", c.k_min, "Smallest cluster count tried");
  t["k_max"] = app.add_option("--k-max", c.k_max, "Largest cluster count tried");
  t["alpha"] = app.add_option("--alpha", c.alpha, "Significance level for local classes");
  t["star_gistar"] = app.add_option("--star-gistar", c.star_gistar, "Include the unit itself in G_i*");
  t["fdr"] = app.add_option("--fdr", c.fdr, "Benjamini-Hochberg gating of local classes");
  t["variance"] = app.add_option("--variance", c.variance, "randomization or normality");
  t["oracle"] = app.add_option("--oracle", c.oracle, "Also compute permutation p-values");
  t["n_perm"] = app.add_option("--n-perm", c.n_perm, "Permutations per oracle test");
  t["seed"] = app.add_option("--seed", c.seed, "Seed for the permutation oracle");
  t["out"] = app.add_option("--out", c.out, "Output directory");
  t["profile"] = app.add_option("--profile", profile, "paper or permissive")
                     ->check(CLI::IsMember({"paper", "permissive"}));
  t["jobs"] = app.add_option("--jobs", c.jobs, "Concurrent per-site analyses");
  for (auto& [name, option] : t) option->capture_default_str();
  return t;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Areal mortality analysis: standardized rates, clustering and spatial autocorrelation",
               "arealstat"};
  app.set_version_flag("--version", std::string(AREALSTAT_VERSION));
  app.set_config("--config", "", "INI file with option=value lines");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  RunConfig config;
  std::string profile = "paper";
  const auto options = add_options(app, config, profile);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress logs");

  const std::map<std::string, std::string> stages{
      {"parse", "Ingest records, apply inclusion rules, build the rate matrix"},
      {"weights", "Derive contiguity weights"},
      {"cluster", "Mahalanobis distances, Ward clustering, silhouette selection"},
      {"moran", "Global Moran's I per site"},
      {"lisa", "Local Moran's I per site"},
      {"gistar", "Getis-Ord G_i* per site and the hotspot tally"},
      {"run", "Every stage in order plus the bundle manifest"}};
  for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << AREALSTAT_VERSION << '\n';
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", "cli", "config", e.what(), {});
    return kConfigError;
  }

  config.profile = profile == "paper" ? Profile::paper : Profile::permissive;
  std::string stage = app.get_subcommands().front()->get_name();
  try {
    std::set<std::string> explicit_options;
    for (const auto& [name, option] : options) {
      if (option->count() > 0) explicit_options.insert(name);
    }
    validate(config, explicit_options);
  } catch (const Error& e) {
    report_error(err, "config", e.module(), std::string(to_string(e.kind())), e.message(), e.details());
    return kConfigError;
  }

  std::ostream null_stream(nullptr);
  std::optional<Pipeline> pipeline;
  try {
    pipeline.emplace(config, quiet ? null_stream : err);
    auto& p = *pipeline;
    if (stage == "parse") p.parse();
    else if (stage == "weights") p.weights();
    else if (stage == "cluster") p.cluster();
    else if (stage == "moran") p.moran();
    else if (stage == "lisa") p.lisa();
    else if (stage == "gistar") p.gistar();
    else p.run();
  } catch (const Error& e) {
    const auto where = pipeline ? pipeline->stage() : stage;
    report_error(err, where, e.module(), std::string(to_string(e.kind())), e.message(), e.details());
    return e.kind() == ErrorKind::config ? kConfigError : kModuleError;
  } catch (const std::exception& e) {
    report_error(err, pipeline ? pipeline->stage() : stage, "cli", "internal", e.what(), {});
    return kModuleError;
  }

  for (const auto& f : pipeline->failures()) report_error(err, f.stage, f.module, f.kind, f.message, f.details);
  if (!pipeline->bundle().gaps().empty()) {
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : pipeline->bundle().gaps()) gaps.push_back({{"layer", g.layer}, {"reason", g.reason}});
    err << nlohmann::json{{"gaps", gaps}}.dump() << '\n';
    return kPartial;
  }
  return kSuccess;
}

}  // namespace arealstat::cli
