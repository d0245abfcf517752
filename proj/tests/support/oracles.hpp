#pragma once

// Independent re-derivations used to check the library. These work on dense
// matrices and brute-force enumeration and share no code with src/.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "arealstat/weights.hpp"

namespace arealstat::testing {

inline Eigen::MatrixXd dense(const weights::SpatialWeights& w) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (const auto& e : w.rows[i]) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.index)) = e.weight;
  }
  return d;
}

inline Eigen::VectorXd vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double moran_dense(const Eigen::VectorXd& x, const Eigen::MatrixXd& W) {
  const Eigen::VectorXd z = x.array() - x.mean();
  return static_cast<double>(x.size()) / W.sum() * z.dot(W * z) / z.squaredNorm();
}

/// Local Moran with the sample variance.
inline double local_moran_dense(const Eigen::VectorXd& x, const Eigen::MatrixXd& W, Eigen::Index i) {
  const Eigen::VectorXd z = x.array() - x.mean();
  const double s2 = z.squaredNorm() / static_cast<double>(x.size() - 1);
  return z(i) / s2 * W.row(i).dot(z);
}

inline double gistar_dense(const Eigen::VectorXd& x, const Eigen::MatrixXd& W, Eigen::Index i) {
  const double n = static_cast<double>(x.size());
  const double mean = x.mean();
  const double s = std::sqrt((x.array() - mean).square().sum() / (n - 1.0));
  const double sw = W.row(i).sum();
  const double sw2 = W.row(i).squaredNorm();
  return (W.row(i).dot(x) - mean * sw) / (s * std::sqrt((n * sw2 - sw * sw) / (n - 1.0)));
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact mean and variance of f over every permutation of x (n <= 8).
inline Moments permutation_moments(std::vector<double> x, const std::function<double(const Eigen::VectorXd&)>& f) {
  std::sort(x.begin(), x.end());
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  double s = 0.0;
  double s2 = 0.0;
  double count = 0.0;
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  do {
    for (std::size_t k = 0; k < idx.size(); ++k) v(static_cast<Eigen::Index>(k)) = x[idx[k]];
    const double y = f(v);
    s += y;
    s2 += y * y;
    count += 1.0;
  } while (std::next_permutation(idx.begin(), idx.end()));
  const double mean = s / count;
  return {mean, s2 / count - mean * mean};
}

inline double mahalanobis_inverse(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& sigma) {
  const Eigen::VectorXd d = x - y;
  return std::sqrt(d.dot(sigma.inverse() * d));
}

inline double sum_squared_error(const Eigen::MatrixXd& points, const std::vector<int>& members) {
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(points.cols());
  for (int m : members) c += points.row(m);
  c /= static_cast<double>(members.size());
  double e = 0.0;
  for (int m : members) e += (points.row(m) - c).squaredNorm();
  return e;
}

/// Greedy Ward agglomeration driven directly by the increase in within-
/// cluster sum of squares, every candidate pair evaluated afresh. Returns
/// member sets per merge and the Ward.D2 height sqrt(2 * delta).
struct BruteMerge {
  std::set<int> members;
  double height = 0.0;
};

inline std::vector<BruteMerge> brute_ward(const Eigen::MatrixXd& points) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < points.rows(); ++i) clusters.push_back({i});
  std::vector<BruteMerge> out;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0;
    std::size_t bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        auto joined = clusters[a];
        joined.insert(joined.end(), clusters[b].begin(), clusters[b].end());
        const double delta = sum_squared_error(points, joined) - sum_squared_error(points, clusters[a]) -
                             sum_squared_error(points, clusters[b]);
        if (delta < best) {
          best = delta;
          ba = a;
          bb = b;
        }
      }
    }
    auto joined = clusters[ba];
    joined.insert(joined.end(), clusters[bb].begin(), clusters[bb].end());
    out.push_back({std::set<int>(joined.begin(), joined.end()), std::sqrt(2.0 * best)});
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    clusters[ba] = joined;
  }
  return out;
}

inline double silhouette_brute(const Eigen::MatrixXd& d, const std::vector<int>& labels) {
  const auto n = labels.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<int> others;
    double own = 0.0;
    int own_n = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == labels[i]) {
        if (j != i) {
          own += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          ++own_n;
        }
      } else {
        others.insert(labels[j]);
      }
    }
    if (own_n == 0) continue;
    double b = std::numeric_limits<double>::infinity();
    for (int l : others) {
      double s = 0.0;
      int c = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[j] == l) {
          s += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
          ++c;
        }
      }
      b = std::min(b, s / c);
    }
    const double a = own / own_n;
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace arealstat::testing
