#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arealstat/config.hpp"
#include "arealstat/geojson.hpp"
#include "arealstat/report.hpp"
#include "arealstat/standardize.hpp"
#include "arealstat/weights.hpp"

namespace arealstat::cli {

/// Stage failure recorded by `run` so later stages can continue.
struct StageFailure {
  std::string stage;
  std::string module;
  std::string kind;
  std::string message;
  std::vector<std::string> details;
};

/// Runs pipeline stages against one output directory. Stages communicate
/// only through files in that directory.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::ostream& log);

  void parse();
  void weights();
  void cluster();
  void moran();
  void lisa();
  void gistar();

  /// Every stage in order, then manifest.json. Stage errors after parse are
  /// recorded as failures and gaps instead of aborting the run.
  void run();

  const std::string& stage() const noexcept { return stage_; }
  const report::BundleWriter& bundle() const noexcept { return bundle_; }
  const std::vector<StageFailure>& failures() const noexcept { return failures_; }

 private:
  std::filesystem::path upstream(const std::string& name) const;
  standardize::RateMatrix load_rates() const;
  weights::NeighborGraph load_graph(const standardize::RateMatrix& rates) const;
  const geo::FeatureCollection* geometry();
  void log(const std::string& line);
  void begin(const std::string& stage);

  RunConfig config_;
  std::ostream& log_;
  report::BundleWriter bundle_;
  std::optional<geo::FeatureCollection> geometry_;
  std::string stage_;
  std::vector<StageFailure> failures_;
};

}  // namespace arealstat::cli
