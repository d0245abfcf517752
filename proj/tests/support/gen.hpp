#pragma once

// Hand-rolled generators for property tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "arealstat/ingest.hpp"
#include "arealstat/weights.hpp"

namespace arealstat::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(engine_); }

  std::vector<double> normals(std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = normal(mean, sd);
    return v;
  }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    }
    return m;
  }

  /// Random well-conditioned invertible matrix: identity plus noise,
  /// rejected until |det| is comfortably away from zero.
  Eigen::MatrixXd invertible(Eigen::Index p) {
    for (;;) {
      Eigen::MatrixXd a = matrix(p, p);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
      const auto& s = svd.singularValues();
      if (s(p - 1) > 0.2 && s(0) / s(p - 1) < 50.0) return a;
    }
  }

  /// Symmetric graph over n units where each unit gets at least one
  /// neighbor (a ring) plus random chords.
  weights::NeighborGraph connected_graph(std::size_t n, double chord_p) {
    weights::NeighborGraph g;
    g.unit_ids.resize(n);
    g.adjacency.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.unit_ids[i] = "u" + std::to_string(1000 + i);
    std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) a[i][(i + 1) % n] = a[(i + 1) % n][i] = true;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 2; j < n; ++j) {
        if (coin(chord_p)) a[i][j] = a[j][i] = true;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && a[i][j]) g.adjacency[i].push_back(j);
      }
    }
    return g;
  }

  /// Valid, unique-keyed records; a fraction are suppressed.
  std::vector<ingest::MortalityRecord> records(std::size_t units, std::size_t sites, int years) {
    std::vector<ingest::MortalityRecord> out;
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t s = 0; s < sites; ++s) {
        for (int y = 0; y < years; ++y) {
          ingest::MortalityRecord r;
          r.unit_id = "S" + std::to_string(10 + u);
          r.unit_name = "State, \"" + std::to_string(u) + "\"";
          r.site = "Site " + std::to_string(s);
          r.year = 2000 + y;
          if (coin(0.15)) {
            r.suppressed = true;
          } else {
            r.population = integer(1000, 5000000);
            r.deaths = integer(0, 400);
            r.age_adjusted_rate = uniform(0.0, 90.0);
          }
          out.push_back(r);
        }
      }
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace arealstat::testing
