#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "arealstat/cluster.hpp"
#include "arealstat/error.hpp"
#include "gen.hpp"
#include "oracles.hpp"

using namespace arealstat;
using namespace arealstat::cluster;

namespace {

std::vector<std::string> ids(Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back("u" + std::to_string(i));
  return out;
}

Eigen::MatrixXd points_1d(std::initializer_list<double> xs) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return p;
}

std::set<int> members(std::span<const Merge> merges, std::size_t n, std::size_t id) {
  if (id < n) return {static_cast<int>(id)};
  const auto& m = merges[id - n];
  auto a = members(merges, n, m.cluster_a);
  const auto b = members(merges, n, m.cluster_b);
  a.insert(b.begin(), b.end());
  return a;
}

// Canonical partition: sorted list of member sets.
std::set<std::set<int>> partition(const std::vector<int>& labels) {
  std::map<int, std::set<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(static_cast<int>(i));
  std::set<std::set<int>> out;
  for (auto& [l, g] : groups) out.insert(g);
  return out;
}

}  // namespace

TEST_CASE("Mahalanobis hand cases") {
  Eigen::LLT<Eigen::MatrixXd> identity(Eigen::MatrixXd::Identity(2, 2));
  CHECK(mahalanobis_distance(Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 4), identity) == doctest::Approx(5.0));
  CHECK(mahalanobis_distance(Eigen::Vector2d(1, 7), Eigen::Vector2d(1, 7), identity) == 0.0);
  Eigen::Matrix2d sigma;
  sigma << 4, 0, 0, 1;
  Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd{sigma});
  const double d = mahalanobis_distance(Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 0), llt);
  CHECK(std::abs(d - 1.0) < 1e-10);
  CHECK(std::abs(d - testing::mahalanobis_inverse(Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 0), sigma)) < 1e-10);
}

TEST_CASE("Mahalanobis matrix agrees with the explicit inverse and is a metric") {
  testing::Gen g(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = g.integer(1, 5);
    const Eigen::Index n = g.integer(3, 12);
    const Eigen::MatrixXd a = g.invertible(p);
    const Eigen::MatrixXd sigma = a * a.transpose();
    const Eigen::MatrixXd x = g.matrix(n, p);
    const auto d = mahalanobis_matrix(x, sigma, ids(n));
    CHECK(d.metric == Metric::mahalanobis);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(d.values(i, i) == 0.0);
      for (Eigen::Index j = 0; j < n; ++j) {
        CHECK(d.values(i, j) >= 0.0);
        CHECK(d.values(i, j) == d.values(j, i));
        const double oracle = testing::mahalanobis_inverse(x.row(i).transpose(), x.row(j).transpose(), sigma);
        CHECK(std::abs(d.values(i, j) - oracle) < 1e-9 * std::max(1.0, oracle));
        for (Eigen::Index k = 0; k < n; ++k) CHECK(d.values(i, k) <= d.values(i, j) + d.values(j, k) + 1e-12);
      }
    }
  }
}

TEST_CASE("covariance of z-scores, ridge path and singular failure") {
  testing::Gen g(23);
  Eigen::MatrixXd data = g.matrix(4000, 3);
  const auto est = estimate_covariance(data);
  CHECK(est.ridge == 0.0);
  CHECK((est.matrix - est.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((est.matrix - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);

  Eigen::MatrixXd dup(30, 3);
  dup.leftCols(2) = g.matrix(30, 2);
  dup.col(2) = dup.col(1);
  const auto ridged = estimate_covariance(dup);
  CHECK(ridged.ridge > 0.0);
  CHECK(ridged.condition_estimate <= 1e12);
  Eigen::LLT<Eigen::MatrixXd> llt(ridged.matrix);
  CHECK(llt.info() == Eigen::Success);

  try {
    estimate_covariance(dup, {1e-30, 1e12});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular);
  }
  CHECK_THROWS_AS(estimate_covariance(g.matrix(1, 3)), Error);
}

TEST_CASE("49 x 16 random matrix needs no ridge") {
  testing::Gen g(49);
  const auto est = estimate_covariance(g.matrix(49, 16));
  CHECK(est.ridge == 0.0);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(est.matrix).info() == Eigen::Success);
}

TEST_CASE("affine maps with transformed covariance preserve distances") {
  testing::Gen g(29);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd x = g.matrix(10, 3);
    const Eigen::MatrixXd b = g.invertible(3);
    const Eigen::MatrixXd sigma = b * b.transpose();
    const Eigen::MatrixXd a = g.invertible(3);
    const Eigen::MatrixXd y = x * a.transpose();
    const auto d1 = mahalanobis_matrix(x, sigma, ids(10));
    const auto d2 = mahalanobis_matrix(y, a * sigma * a.transpose(), ids(10));
    CHECK((d1.values - d2.values).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("Ward on two tight pairs merges each pair first") {
  const auto d = euclidean_matrix(points_1d({0, 0.1, 10, 10.1}), ids(4));
  const auto merges = ward_cluster(d);
  REQUIRE(merges.size() == 3);
  const auto oracle = testing::brute_ward(points_1d({0, 0.1, 10, 10.1}));
  const std::set<std::set<int>> first_two{members(merges, 4, 4), members(merges, 4, 5)};
  CHECK(first_two == std::set<std::set<int>>{{0, 1}, {2, 3}});
  CHECK(members(merges, 4, 6) == std::set<int>{0, 1, 2, 3});
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(members(merges, 4, 4 + s) == oracle[s].members);
    CHECK(merges[s].height == doctest::Approx(oracle[s].height).epsilon(1e-12));
  }
  CHECK(merges[0].height == doctest::Approx(0.1));
}

TEST_CASE("Ward with two points is a single merge at their distance") {
  const auto merges = ward_cluster(euclidean_matrix(points_1d({1.5, 4.0}), ids(2)));
  REQUIRE(merges.size() == 1);
  CHECK(merges[0].cluster_a == 0);
  CHECK(merges[0].cluster_b == 1);
  CHECK(merges[0].height == doctest::Approx(2.5));
  CHECK(merges[0].size == 2);
}

TEST_CASE("Ward matches brute-force sum-of-squares agglomeration on random data") {
  testing::Gen g(61);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = g.integer(3, 12);
    const Eigen::MatrixXd x = g.matrix(n, g.integer(1, 4));
    const auto merges = ward_cluster(euclidean_matrix(x, ids(n)));
    const auto oracle = testing::brute_ward(x);
    for (std::size_t s = 0; s < merges.size(); ++s) {
      CHECK(members(merges, static_cast<std::size_t>(n), static_cast<std::size_t>(n) + s) == oracle[s].members);
      CHECK(merges[s].height == doctest::Approx(oracle[s].height).epsilon(1e-9));
      if (s > 0) CHECK(merges[s].height >= merges[s - 1].height - 1e-12);
      CHECK(merges[s].cluster_a < merges[s].cluster_b);
    }
  }
}

TEST_CASE("cutting at k-1 only merges clusters from the cut at k") {
  testing::Gen g(71);
  const Eigen::Index n = 15;
  const auto merges = ward_cluster(euclidean_matrix(g.matrix(n, 2), ids(n)));
  for (std::size_t k = 2; k <= 14; ++k) {
    const auto fine = cut_tree(merges, n, k);
    const auto coarse = cut_tree(merges, n, k - 1);
    CHECK(*std::max_element(fine.begin(), fine.end()) == static_cast<int>(k));
    std::map<int, int> parent;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [it, inserted] = parent.emplace(fine[static_cast<std::size_t>(i)], coarse[static_cast<std::size_t>(i)]);
      CHECK(it->second == coarse[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("partitions do not depend on input order") {
  testing::Gen g(83);
  const Eigen::Index n = 12;
  const Eigen::MatrixXd x = g.matrix(n, 3);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937(3));
  Eigen::MatrixXd y(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) y.row(i) = x.row(order[static_cast<std::size_t>(i)]);
  for (std::size_t k = 2; k <= 6; ++k) {
    const auto a = cut_tree(ward_cluster(euclidean_matrix(x, ids(n))), n, k);
    const auto b = cut_tree(ward_cluster(euclidean_matrix(y, ids(n))), n, k);
    std::vector<int> back(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) back[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = b[static_cast<std::size_t>(i)];
    CHECK(partition(a) == partition(back));
  }
}

TEST_CASE("silhouette widths match a direct evaluation") {
  testing::Gen g(91);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = g.integer(4, 14);
    const auto d = euclidean_matrix(g.matrix(n, 2), ids(n));
    const auto merges = ward_cluster(d);
    for (std::size_t k = 2; k < static_cast<std::size_t>(n); ++k) {
      const auto labels = cut_tree(merges, n, k);
      CHECK(mean_silhouette(d, labels) == doctest::Approx(testing::silhouette_brute(d.values, labels)).epsilon(1e-12));
    }
  }
}

TEST_CASE("two well-separated blobs select k = 2") {
  testing::Gen g(101);
  Eigen::MatrixXd x(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) {
    x(i, 0) = (i < 5 ? 0.0 : 20.0) + g.normal(0, 0.5);
    x(i, 1) = g.normal(0, 0.5);
  }
  const auto d = euclidean_matrix(x, ids(10));
  const auto sol = silhouette_select(d, ward_cluster(d));
  CHECK(sol.chosen_k == 2);
  CHECK(sol.silhouette_by_k.at(2) > 0.8);
  for (const auto& [k, s] : sol.silhouette_by_k) {
    const auto labels = cut_tree(sol.merges, 10, static_cast<std::size_t>(k));
    CHECK(s == doctest::Approx(testing::silhouette_brute(d.values, labels)).epsilon(1e-12));
    CHECK(s <= sol.silhouette_by_k.at(2));
  }
  CHECK(sol.silhouette_by_k.rbegin()->first == 9);
  std::set<int> labels(sol.assignments.begin(), sol.assignments.end());
  CHECK(labels == std::set<int>{1, 2});
}

TEST_CASE("equidistant points tie at zero and pick the smallest k") {
  const Eigen::Index n = 6;
  DistanceMatrix d;
  d.unit_ids = ids(n);
  d.values = Eigen::MatrixXd::Constant(n, n, 1.0);
  d.values.diagonal().setZero();
  const auto sol = silhouette_select(d, ward_cluster(d), {2, 5});
  for (const auto& [k, s] : sol.silhouette_by_k) CHECK(std::abs(s) < 1e-12);
  CHECK(sol.chosen_k == 2);
}

TEST_CASE("empty k range is rejected") {
  const auto d = euclidean_matrix(points_1d({0, 1, 2, 3}), ids(4));
  CHECK_THROWS_AS(silhouette_select(d, ward_cluster(d), {5, 4}), Error);
}

TEST_CASE("cluster CSV writers") {
  const auto d = euclidean_matrix(points_1d({0, 0.1, 10, 10.1}), ids(4));
  const auto sol = silhouette_select(d, ward_cluster(d), {2, 3});
  std::ostringstream merges;
  write_merges_csv(merges, sol.merges);
  CHECK(merges.str().rfind("step,cluster_a,cluster_b,height\n1,", 0) == 0);
  std::ostringstream assign;
  write_assignments_csv(assign, sol);
  CHECK(assign.str() == "unit_id,cluster\nu0,1\nu1,1\nu2,2\nu3,2\n");
  std::ostringstream sil;
  write_silhouette_csv(sil, sol);
  CHECK(sil.str().rfind("k,mean_silhouette\n2,", 0) == 0);
}
