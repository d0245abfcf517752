#include "arealstat/spatial_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::spatial {

namespace {

constexpr const char* kModule = "spatial_stats";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using weights::SpatialWeights;
using weights::WeightsKind;

struct Moments {
  double mean = 0.0;
  double sum_sq = 0.0;  // sum of squared deviations
  double m2 = 0.0;      // sum_sq / n
  double b2 = 0.0;      // kurtosis m4 / m2^2
  double s2 = 0.0;      // sample variance
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double s4 = 0.0;
  double scale = 0.0;
  for (double v : x) {
    const double z = v - m.mean;
    m.sum_sq += z * z;
    s4 += z * z * z * z;
    scale = std::max(scale, std::abs(v));
  }
  m.m2 = m.sum_sq / n;
  m.s2 = m.sum_sq / (n - 1.0);
  if (!(std::sqrt(m.m2) > 1e-12 * std::max(1.0, scale))) {
    throw Error(kModule, ErrorKind::zero_variance, "values have zero variance");
  }
  m.b2 = (s4 / n) / (m.m2 * m.m2);
  return m;
}

void check_size(std::span<const double> values, const SpatialWeights& w) {
  if (values.size() != w.size()) {
    throw Error(kModule, ErrorKind::validation,
                "got " + std::to_string(values.size()) + " values for " + std::to_string(w.size()) +
                    " weighted units");
  }
}

void require_no_self_weights(const SpatialWeights& w, const char* what) {
  if (w.kind == WeightsKind::star_row_standardized) {
    throw Error(kModule, ErrorKind::validation,
                std::string(what) + " expects weights without self-links (got star weights)");
  }
}

// Applies the island policy. Returns the indices kept for analysis.
std::vector<std::size_t> kept_units(const SpatialWeights& w, IslandPolicy policy) {
  if (!w.islands.empty() && policy == IslandPolicy::error) {
    std::vector<std::string> ids;
    for (auto i : w.islands) ids.push_back(w.unit_ids[i]);
    throw Error(kModule, ErrorKind::island,
                std::to_string(ids.size()) + " unit(s) without neighbors; remove them or reassign weights",
                ids);
  }
  std::vector<std::size_t> keep;
  const std::set<std::size_t> islands(w.islands.begin(), w.islands.end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!islands.contains(i)) keep.push_back(i);
  }
  return keep;
}

double lag(const SpatialWeights& w, std::size_t i, std::span<const double> x, double center) {
  double s = 0.0;
  for (const auto& e : w.rows[i]) s += e.weight * (x[e.index] - center);
  return s;
}

double moran_ratio(const SpatialWeights& w, std::span<const double> x, double s0) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double cross = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double zi = x[i] - mean;
    cross += zi * lag(w, i, x, mean);
    ss += zi * zi;
  }
  return n / s0 * cross / ss;
}

struct WeightSums {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

WeightSums weight_sums(const SpatialWeights& w) {
  WeightSums s;
  std::vector<double> col(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (const auto& e : w.rows[i]) {
      s.s0 += e.weight;
      col[e.index] += e.weight;
      const double back = w.weight(e.index, i);
      const double both = e.weight + back;
      // An entry without its transpose stands for both ordered pairs.
      const bool has_back = std::any_of(w.rows[e.index].begin(), w.rows[e.index].end(),
                                        [&](const weights::WeightEntry& b) { return b.index == i; });
      s.s1 += both * both * (has_back ? 1.0 : 2.0);
    }
  }
  s.s1 *= 0.5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = w.row_sum(i) + col[i];
    s.s2 += t * t;
  }
  return s;
}

struct LocalMoranMoments {
  double expected = 0.0;  // for the m2-scaled statistic
  double sd = 0.0;
};

LocalMoranMoments local_moran_moments(const SpatialWeights& w, std::size_t i, double n, double b2) {
  double wi = 0.0;
  double wi2 = 0.0;
  for (const auto& e : w.rows[i]) {
    if (e.index == i) continue;
    wi += e.weight;
    wi2 += e.weight * e.weight;
  }
  const double cross = wi * wi - wi2;  // sum over k != h of w_ik w_ih
  LocalMoranMoments m;
  m.expected = -wi / (n - 1.0);
  const double var = wi2 * (n - b2) / (n - 1.0) +
                     cross * (2.0 * b2 - n) / ((n - 1.0) * (n - 2.0)) - m.expected * m.expected;
  m.sd = var > 0.0 ? std::sqrt(var) : kNaN;
  return m;
}

struct GistarTerms {
  double weight_sum = 0.0;
  double denominator_root = 0.0;  // sqrt of the bracket
};

GistarTerms gistar_terms(const SpatialWeights& w, std::size_t i, double n) {
  double sw = 0.0;
  double sw2 = 0.0;
  for (const auto& e : w.rows[i]) {
    sw += e.weight;
    sw2 += e.weight * e.weight;
  }
  const double bracket = (n * sw2 - sw * sw) / (n - 1.0);
  if (!(bracket > 1e-14 * n * sw2)) {
    throw Error(kModule, ErrorKind::degenerate_weights,
                "unit '" + w.unit_ids[i] + "' has a non-positive G_i* variance term");
  }
  return {sw, std::sqrt(bracket)};
}

void classify(std::vector<LocalStatResult>& results, const std::vector<double>& lags,
              const std::vector<double>& centered, const LocalOptions& options, bool lisa) {
  std::vector<double> p(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) p[i] = results[i].p_two_sided;
  std::vector<bool> significant(results.size(), false);
  if (options.fdr) {
    significant = benjamini_hochberg(p, options.alpha);
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) significant[i] = p[i] < options.alpha;
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (!significant[i] || std::isnan(r.z)) {
      r.cls = LocalClass::not_significant;
    } else if (lisa) {
      const bool high = centered[i] > 0.0;
      const bool high_lag = lags[i] > 0.0;
      r.cls = high ? (high_lag ? LocalClass::high_high : LocalClass::high_low)
                   : (high_lag ? LocalClass::low_high : LocalClass::low_low);
    } else {
      r.cls = r.z > 0.0 ? LocalClass::hotspot : LocalClass::coldspot;
    }
  }
}

std::vector<LocalStatResult> blank_results(const SpatialWeights& w, const std::string& site) {
  std::vector<LocalStatResult> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = {w.unit_ids[i], site, kNaN, kNaN, kNaN, LocalClass::not_significant};
  }
  return out;
}

template <class Compute>
std::vector<LocalStatResult> run_local(std::span<const double> values, const SpatialWeights& w,
                                       const LocalOptions& options, const std::string& site,
                                       Compute compute) {
  check_size(values, w);
  const auto keep = kept_units(w, options.islands);
  if (keep.size() < 4) {
    throw Error(kModule, ErrorKind::insufficient_data, "local statistics need at least four units");
  }
  std::vector<double> sub(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) sub[k] = values[keep[k]];
  const SpatialWeights ws = keep.size() == w.size() ? w : w.subset(keep);
  auto partial = compute(std::span<const double>(sub), ws);
  auto out = blank_results(w, site);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    partial[k].site = site;
    out[keep[k]] = std::move(partial[k]);
  }
  return out;
}

}  // namespace

std::string_view to_string(LocalClass cls) noexcept {
  switch (cls) {
    case LocalClass::high_high: return "High-High";
    case LocalClass::low_low: return "Low-Low";
    case LocalClass::high_low: return "High-Low";
    case LocalClass::low_high: return "Low-High";
    case LocalClass::hotspot: return "Hotspot";
    case LocalClass::coldspot: return "Coldspot";
    case LocalClass::not_significant: return "Not Significant";
  }
  return "Not Significant";
}

std::optional<LocalClass> parse_local_class(std::string_view label) noexcept {
  for (auto cls : {LocalClass::high_high, LocalClass::low_low, LocalClass::high_low,
                   LocalClass::low_high, LocalClass::hotspot, LocalClass::coldspot,
                   LocalClass::not_significant}) {
    if (to_string(cls) == label) return cls;
  }
  return std::nullopt;
}

double normal_two_sided_p(double z) noexcept {
  if (std::isnan(z)) return kNaN;
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

GlobalMoranResult global_moran(std::span<const double> values, const SpatialWeights& w,
                               const GlobalMoranOptions& options, std::string site) {
  check_size(values, w);
  require_no_self_weights(w, "global Moran's I");
  const auto keep = kept_units(w, options.islands);
  if (keep.size() < 2) {
    throw Error(kModule, ErrorKind::insufficient_data, "Moran's I needs at least two units");
  }
  std::vector<double> x(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) x[k] = values[keep[k]];
  const SpatialWeights ws = keep.size() == w.size() ? w : w.subset(keep);

  GlobalMoranResult r;
  r.site = std::move(site);
  for (auto i : w.islands) r.dropped_units.push_back(w.unit_ids[i]);
  const auto m = moments(x);
  const auto sums = weight_sums(ws);
  const double n = static_cast<double>(x.size());
  r.n = x.size();
  r.I = moran_ratio(ws, x, sums.s0);
  r.expected_I = -1.0 / (n - 1.0);
  r.outside_soft_bounds = std::abs(r.I) > 1.5;
  if (r.n <= 3) {
    r.inference_available = false;
    r.variance_I = r.z = r.p_two_sided = r.p_one_sided = kNaN;
    return r;
  }
  const double s0sq = sums.s0 * sums.s0;
  if (options.assumption == VarianceAssumption::normality) {
    r.variance_I = (n * n * sums.s1 - n * sums.s2 + 3.0 * s0sq) / ((n * n - 1.0) * s0sq) -
                   r.expected_I * r.expected_I;
  } else {
    const double a = n * ((n * n - 3.0 * n + 3.0) * sums.s1 - n * sums.s2 + 3.0 * s0sq);
    const double b = m.b2 * ((n * n - n) * sums.s1 - 2.0 * n * sums.s2 + 6.0 * s0sq);
    r.variance_I = (a - b) / ((n - 1.0) * (n - 2.0) * (n - 3.0) * s0sq) - r.expected_I * r.expected_I;
  }
  r.z = r.variance_I > 0.0 ? (r.I - r.expected_I) / std::sqrt(r.variance_I) : kNaN;
  r.p_two_sided = normal_two_sided_p(r.z);
  r.p_one_sided = std::isnan(r.z) ? kNaN : 0.5 * std::erfc(r.z / std::sqrt(2.0));
  return r;
}

std::vector<LocalStatResult> local_moran(std::span<const double> values, const SpatialWeights& w,
                                         const LocalOptions& options, const std::string& site) {
  require_no_self_weights(w, "local Moran's I");
  return run_local(values, w, options, site, [&](std::span<const double> x, const SpatialWeights& ws) {
    const auto m = moments(x);
    const double n = static_cast<double>(x.size());
    std::vector<LocalStatResult> out(x.size());
    std::vector<double> lags(x.size());
    std::vector<double> centered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      centered[i] = x[i] - m.mean;
      lags[i] = lag(ws, i, x, m.mean);
      // Moments are derived for the m2-scaled statistic; z is scale-free.
      const auto mom = local_moran_moments(ws, i, n, m.b2);
      const double scaled = centered[i] * lags[i] / m.m2;
      auto& r = out[i];
      r.unit_id = ws.unit_ids[i];
      r.statistic = centered[i] * lags[i] / m.s2;
      r.z = (scaled - mom.expected) / mom.sd;
      r.p_two_sided = normal_two_sided_p(r.z);
    }
    classify(out, lags, centered, options, true);
    return out;
  });
}

std::vector<LocalStatResult> getis_ord_gistar(std::span<const double> values, const SpatialWeights& w,
                                              const LocalOptions& options, const std::string& site) {
  return run_local(values, w, options, site, [&](std::span<const double> x, const SpatialWeights& ws) {
    const auto m = moments(x);
    const double n = static_cast<double>(x.size());
    const double sd = std::sqrt(m.s2);
    std::vector<LocalStatResult> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto t = gistar_terms(ws, i, n);
      double weighted = 0.0;
      for (const auto& e : ws.rows[i]) weighted += e.weight * x[e.index];
      auto& r = out[i];
      r.unit_id = ws.unit_ids[i];
      r.statistic = (weighted - m.mean * t.weight_sum) / (sd * t.denominator_root);
      r.z = r.statistic;
      r.p_two_sided = normal_two_sided_p(r.z);
    }
    classify(out, {}, {}, options, false);
    return out;
  });
}

std::vector<bool> benjamini_hochberg(std::span<const double> p_values, double alpha) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < p_values.size(); ++i) {
    if (!std::isnan(p_values[i])) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  const double m = static_cast<double>(order.size());
  std::size_t cutoff = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (p_values[order[r]] < static_cast<double>(r + 1) / m * alpha) cutoff = r + 1;
  }
  std::vector<bool> reject(p_values.size(), false);
  for (std::size_t r = 0; r < cutoff; ++r) reject[order[r]] = true;
  return reject;
}

std::function<double(std::span<const double>)> moran_deviation_statistic(const SpatialWeights& w) {
  require_no_self_weights(w, "global Moran's I");
  const double s0 = weight_sums(w).s0;
  const double expected = -1.0 / (static_cast<double>(w.size()) - 1.0);
  return [&w, s0, expected](std::span<const double> x) { return moran_ratio(w, x, s0) - expected; };
}

std::function<double(std::size_t, std::span<const double>)> local_moran_z_statistic(
    std::span<const double> values, const SpatialWeights& w) {
  check_size(values, w);
  require_no_self_weights(w, "local Moran's I");
  const auto m = moments(values);
  const double n = static_cast<double>(values.size());
  std::vector<LocalMoranMoments> mom(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mom[i] = local_moran_moments(w, i, n, m.b2);
  return [&w, m, mom = std::move(mom)](std::size_t i, std::span<const double> x) {
    const double scaled = (x[i] - m.mean) * lag(w, i, x, m.mean) / m.m2;
    return (scaled - mom[i].expected) / mom[i].sd;
  };
}

std::function<double(std::size_t, std::span<const double>)> gistar_statistic(
    std::span<const double> values, const SpatialWeights& w) {
  check_size(values, w);
  const auto m = moments(values);
  const double n = static_cast<double>(values.size());
  const double sd = std::sqrt(m.s2);
  std::vector<GistarTerms> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) terms[i] = gistar_terms(w, i, n);
  return [&w, m, sd, terms = std::move(terms)](std::size_t i, std::span<const double> x) {
    double weighted = 0.0;
    for (const auto& e : w.rows[i]) weighted += e.weight * x[e.index];
    return (weighted - m.mean * terms[i].weight_sum) / (sd * terms[i].denominator_root);
  };
}

std::vector<std::pair<std::string, int>> HotspotTally::top(std::size_t n) const {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& entry : counts) {
    if (out.size() >= n || entry.second == 0) break;
    out.push_back(entry);
  }
  return out;
}

HotspotTally hotspot_frequency(std::span<const std::vector<LocalStatResult>> per_site) {
  std::map<std::string, int> counts;
  std::set<std::string> universe;
  for (std::size_t s = 0; s < per_site.size(); ++s) {
    std::set<std::string> units;
    for (const auto& r : per_site[s]) {
      units.insert(r.unit_id);
      if (r.cls == LocalClass::hotspot) ++counts[r.unit_id];
    }
    if (s == 0) {
      universe = units;
    } else if (units != universe) {
      throw Error(kModule, ErrorKind::validation,
                  "result set #" + std::to_string(s) + " covers a different set of units");
    }
  }
  HotspotTally tally;
  for (const auto& u : universe) tally.counts.emplace_back(u, counts[u]);
  std::stable_sort(tally.counts.begin(), tally.counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return tally;
}

void write_local_csv(std::ostream& out, std::span<const LocalStatResult> results) {
  out << "unit_id,statistic,z,p,class\n";
  for (const auto& r : results) {
    out << text::join_csv({r.unit_id, text::format_double(r.statistic), text::format_double(r.z),
                           text::format_double(r.p_two_sided), std::string(to_string(r.cls))})
        << '\n';
  }
}

void write_global_csv(std::ostream& out, std::span<const GlobalMoranResult> results) {
  out << "site,I,expected,variance,z,p\n";
  for (const auto& r : results) {
    out << text::join_csv({r.site, text::format_double(r.I), text::format_double(r.expected_I),
                           text::format_double(r.variance_I), text::format_double(r.z),
                           text::format_double(r.p_two_sided)})
        << '\n';
  }
}

void write_tally_csv(std::ostream& out, std::span<const std::pair<std::string, int>> counts) {
  out << "unit_id,hotspot_count\n";
  for (const auto& [unit, count] : counts) out << text::csv_field(unit) << ',' << count << '\n';
}

}  // namespace arealstat::spatial
