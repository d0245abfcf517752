#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "arealstat/error.hpp"
#include "arealstat/standardize.hpp"
#include "gen.hpp"

using namespace arealstat;
using namespace arealstat::standardize;

namespace {

ingest::MortalityRecord rec(std::string unit, std::string site, int year, double rate, std::int64_t pop = 1000) {
  return {unit, unit, site, year, 100, pop, rate, false};
}

Eigen::VectorXd col(const RateMatrix& m, Eigen::Index j) { return m.values.col(j); }

double sample_sd(const Eigen::VectorXd& v) {
  return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("age-adjusted rate hand cases") {
  const std::vector<AgeStratum> two{{"a", 1, 100, 0.5}, {"b", 2, 100, 0.5}};
  CHECK(age_adjusted_rate(two) == doctest::Approx(1500.0));
  const std::vector<AgeStratum> zero{{"all", 0, 1000, 1.0}};
  CHECK(age_adjusted_rate(zero) == 0.0);
}

TEST_CASE("age-adjusted rate matches an independent re-evaluation") {
  testing::Gen g(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AgeStratum> s(5);
    double total = 0.0;
    for (auto& x : s) {
      x.deaths = g.integer(0, 500);
      x.population = g.integer(1, 900000);
      x.weight = g.uniform(0.01, 1.0);
      total += x.weight;
    }
    for (auto& x : s) x.weight /= total;
    double expected = 0.0;
    for (const auto& x : s) expected += 100000.0 * static_cast<double>(x.deaths) * x.weight / static_cast<double>(x.population);
    CHECK(age_adjusted_rate(s) == doctest::Approx(expected).epsilon(1e-9));
    auto reversed = s;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(age_adjusted_rate(reversed) == doctest::Approx(age_adjusted_rate(s)).epsilon(1e-12));
  }
}

TEST_CASE("age-adjusted rate is linear in deaths") {
  testing::Gen g(14);
  std::vector<AgeStratum> a(4);
  std::vector<AgeStratum> b(4);
  std::vector<AgeStratum> sum(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto pop = g.integer(100, 10000);
    a[i] = {"g", g.integer(0, 50), pop, 0.25};
    b[i] = {"g", g.integer(0, 50), pop, 0.25};
    sum[i] = {"g", 3 * a[i].deaths + b[i].deaths, pop, 0.25};
  }
  CHECK(age_adjusted_rate(sum) == doctest::Approx(3 * age_adjusted_rate(a) + age_adjusted_rate(b)).epsilon(1e-12));
}

TEST_CASE("age-adjusted rate errors") {
  const std::vector<AgeStratum> zero_pop{{"85+", 1, 0, 1.0}};
  try {
    age_adjusted_rate(zero_pop);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::division);
    CHECK(std::string(e.what()).find("85+") != std::string::npos);
  }
  const std::vector<AgeStratum> bad_weights{{"a", 1, 10, 0.5}, {"b", 1, 10, 0.4}};
  CHECK_THROWS_AS(age_adjusted_rate(bad_weights), Error);
}

TEST_CASE("bundled 2000 standard population") {
  const auto sp = us2000_standard_population();
  CHECK(sp.age_groups.size() == 19);
  CHECK(std::accumulate(sp.weights.begin(), sp.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto file = read_standard_population(std::filesystem::path(AREALSTAT_DATA_DIR) / "us2000_standard_population.csv");
  CHECK(file.age_groups == sp.age_groups);
  for (std::size_t i = 0; i < sp.weights.size(); ++i) CHECK(file.weights[i] == doctest::Approx(sp.weights[i]).epsilon(1e-12));
}

TEST_CASE("cells average the rates within the period") {
  const std::vector<ingest::MortalityRecord> r{rec("A", "s", 2000, 10), rec("A", "s", 2001, 20), rec("A", "s", 2002, 30),
                                               rec("A", "s", 2003, 1000), rec("B", "s", 2000, 4)};
  const auto m = build_rate_matrix(r, {"A", "B"}, {"s"}, {2000, 2002});
  CHECK(m.values(0, 0) == 20.0);
  CHECK(m.values(1, 0) == 4.0);
  CHECK_FALSE(m.standardized);
}

TEST_CASE("3 units x 2 sites x 2 years matches per-cell averaging") {
  testing::Gen g(31);
  std::vector<ingest::MortalityRecord> r;
  const std::vector<std::string> units{"A", "B", "C"};
  const std::vector<std::string> sites{"lung", "liver"};
  double expected[3][2] = {};
  for (std::size_t u = 0; u < 3; ++u) {
    for (std::size_t s = 0; s < 2; ++s) {
      for (int y = 0; y < 2; ++y) {
        const double v = g.uniform(1, 80);
        expected[u][s] += v / 2.0;
        r.push_back(rec(units[u], sites[s], 2010 + y, v));
      }
    }
  }
  const auto m = build_rate_matrix(r, units, sites, {2010, 2011});
  for (Eigen::Index u = 0; u < 3; ++u) {
    for (Eigen::Index s = 0; s < 2; ++s) CHECK(m.values(u, s) == doctest::Approx(expected[u][s]).epsilon(1e-14));
  }
}

TEST_CASE("population-weighted aggregation") {
  const std::vector<ingest::MortalityRecord> r{rec("A", "s", 2000, 10, 1000), rec("A", "s", 2001, 40, 3000)};
  const auto m = build_rate_matrix(r, {"A"}, {"s"}, {2000, 2001}, Aggregation::population_weighted);
  CHECK(m.values(0, 0) == doctest::Approx(32.5));
}

TEST_CASE("missing cells are all listed") {
  const std::vector<ingest::MortalityRecord> r{rec("A", "lung", 2000, 10), rec("B", "liver", 2000, 4)};
  try {
    build_rate_matrix(r, {"A", "B"}, {"liver", "lung"}, {2000, 2000});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::completeness);
    REQUIRE(e.details().size() == 2);
    CHECK(e.details()[0].find("A") != std::string::npos);
    CHECK(e.details()[0].find("liver") != std::string::npos);
  }
}

TEST_CASE("z-scores of a simple column") {
  RateMatrix m;
  m.unit_ids = {"a", "b", "c"};
  m.sites = {"s"};
  m.values = Eigen::MatrixXd(3, 1);
  m.values << 1, 2, 3;
  const auto z = zscore_normalize(m);
  CHECK(z.standardized);
  CHECK(z.values(0, 0) == doctest::Approx(-1.0));
  CHECK(z.values(1, 0) == doctest::Approx(0.0));
  CHECK(z.values(2, 0) == doctest::Approx(1.0));
  CHECK(z.column_means(0) == 2.0);
  CHECK(z.column_sds(0) == 1.0);

  m.values << 5, 5, 5;
  try {
    zscore_normalize(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_column);
    CHECK(std::string(e.what()).find("'s'") != std::string::npos);
  }
}

TEST_CASE("z-scored columns have mean 0 and sample SD 1; scale and row permutation equivariance") {
  testing::Gen g(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = g.integer(3, 30);
    const auto p = g.integer(1, 6);
    RateMatrix m;
    for (int i = 0; i < n; ++i) m.unit_ids.push_back("u" + std::to_string(i));
    for (int j = 0; j < p; ++j) m.sites.push_back("s" + std::to_string(j));
    m.values = (g.matrix(n, p).array() * 10.0 + 30.0).matrix();
    const auto z = zscore_normalize(m);
    for (Eigen::Index j = 0; j < p; ++j) {
      CHECK(std::abs(col(z, j).mean()) < 1e-9);
      CHECK(std::abs(sample_sd(col(z, j)) - 1.0) < 1e-9);
    }
    auto scaled = m;
    const double c = g.uniform(0.01, 100.0);
    scaled.values.col(0) *= c;
    CHECK((zscore_normalize(scaled).values - z.values).cwiseAbs().maxCoeff() < 1e-9);

    auto permuted = m;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937(static_cast<unsigned>(trial)));
    for (int i = 0; i < n; ++i) {
      permuted.values.row(i) = m.values.row(order[static_cast<std::size_t>(i)]);
      permuted.unit_ids[static_cast<std::size_t>(i)] = m.unit_ids[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    const auto zp = zscore_normalize(permuted);
    for (int i = 0; i < n; ++i) {
      CHECK((zp.values.row(i) - z.values.row(order[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("matrix CSV round-trips at full precision") {
  testing::Gen g(4);
  RateMatrix m;
  m.unit_ids = {"AL", "AR", "AZ", "CA"};
  m.sites = {"Lung and Bronchus", "Liver, Bile Duct"};
  m.values = g.matrix(4, 2) * 17.0;
  std::istringstream in(matrix_csv(m));
  const auto back = read_matrix_csv(in);
  CHECK(back.unit_ids == m.unit_ids);
  CHECK(back.sites == m.sites);
  CHECK(back.values == m.values);
}
