#include "arealstat/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "arealstat/error.hpp"
#include "arealstat/text_io.hpp"

namespace arealstat::cluster {

namespace {

constexpr const char* kModule = "cluster";

double condition_number(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& covariance) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw Error(kModule, ErrorKind::singular,
                "covariance matrix is not positive definite; remove collinear sites");
  }
  return llt;
}

DistanceMatrix pairwise(const Eigen::MatrixXd& columns, std::vector<std::string> ids, Metric metric) {
  const auto n = columns.cols();
  DistanceMatrix d;
  d.unit_ids = std::move(ids);
  d.metric = metric;
  d.values = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (columns.col(i) - columns.col(j)).norm();
      d.values(i, j) = v;
      d.values(j, i) = v;
    }
  }
  return d;
}

}  // namespace

CovarianceEstimate estimate_covariance(const Eigen::MatrixXd& data, const RidgePolicy& policy) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 2) throw Error(kModule, ErrorKind::insufficient_data, "covariance needs at least two units");
  if (p < 1) throw Error(kModule, ErrorKind::insufficient_data, "covariance needs at least one site");
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  CovarianceEstimate est;
  est.condition_estimate = condition_number(cov);
  if (est.condition_estimate > policy.cond_max) {
    est.ridge = policy.lambda * cov.trace() / static_cast<double>(p);
    cov.diagonal().array() += est.ridge;
    est.condition_estimate = condition_number(cov);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (est.condition_estimate > policy.cond_max || llt.info() != Eigen::Success) {
    throw Error(kModule, ErrorKind::singular,
                "covariance is singular even after ridge (condition " +
                    text::format_double(est.condition_estimate) +
                    "); remove duplicated or collinear sites");
  }
  est.matrix = std::move(cov);
  return est;
}

CovarianceEstimate estimate_covariance(const standardize::RateMatrix& matrix, const RidgePolicy& policy) {
  if (!matrix.standardized) {
    throw Error(kModule, ErrorKind::validation, "covariance expects a z-scored rate matrix");
  }
  return estimate_covariance(matrix.values, policy);
}

double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const Eigen::LLT<Eigen::MatrixXd>& covariance_factor) {
  const Eigen::VectorXd z = covariance_factor.matrixL().solve(x - y);
  return z.norm();
}

DistanceMatrix mahalanobis_matrix(const Eigen::MatrixXd& points, const Eigen::MatrixXd& covariance,
                                  std::vector<std::string> unit_ids) {
  if (covariance.rows() != points.cols() || covariance.cols() != points.cols()) {
    throw Error(kModule, ErrorKind::validation, "covariance dimension does not match profile length");
  }
  if (static_cast<Eigen::Index>(unit_ids.size()) != points.rows()) {
    throw Error(kModule, ErrorKind::validation, "unit id count does not match profile count");
  }
  const auto llt = factor(covariance);
  const Eigen::MatrixXd whitened = llt.matrixL().solve(points.transpose());
  return pairwise(whitened, std::move(unit_ids), Metric::mahalanobis);
}

DistanceMatrix mahalanobis_matrix(const standardize::RateMatrix& matrix,
                                  const CovarianceEstimate& covariance) {
  return mahalanobis_matrix(matrix.values, covariance.matrix, matrix.unit_ids);
}

DistanceMatrix euclidean_matrix(const Eigen::MatrixXd& points, std::vector<std::string> unit_ids) {
  if (static_cast<Eigen::Index>(unit_ids.size()) != points.rows()) {
    throw Error(kModule, ErrorKind::validation, "unit id count does not match profile count");
  }
  return pairwise(points.transpose(), std::move(unit_ids), Metric::euclidean);
}

std::vector<Merge> ward_cluster(const DistanceMatrix& distances) {
  const auto n = distances.size();
  if (n < 2) throw Error(kModule, ErrorKind::insufficient_data, "clustering needs at least two units");
  if (distances.values.rows() != static_cast<Eigen::Index>(n) ||
      distances.values.cols() != static_cast<Eigen::Index>(n)) {
    throw Error(kModule, ErrorKind::validation, "distance matrix is not n x n");
  }
  Eigen::MatrixXd d2 = distances.values.array().square().matrix();
  std::vector<std::size_t> id(n);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> alive(n, true);
  std::iota(id.begin(), id.end(), 0);

  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t best_i = 0, best_j = 0;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_key{SIZE_MAX, SIZE_MAX};
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        const double v = d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const std::pair key{std::min(id[i], id[j]), std::max(id[i], id[j])};
        if (v < best || (v == best && key < best_key)) {
          best = v;
          best_key = key;
          best_i = i;
          best_j = j;
        }
      }
    }
    const double ni = static_cast<double>(size[best_i]);
    const double nj = static_cast<double>(size[best_j]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == best_i || k == best_j) continue;
      const auto ki = static_cast<Eigen::Index>(k);
      const auto ii = static_cast<Eigen::Index>(best_i);
      const auto jj = static_cast<Eigen::Index>(best_j);
      const double nk = static_cast<double>(size[k]);
      const double updated =
          ((ni + nk) * d2(ki, ii) + (nj + nk) * d2(ki, jj) - nk * best) / (ni + nj + nk);
      d2(ki, ii) = d2(ii, ki) = std::max(updated, 0.0);
    }
    merges.push_back({best_key.first, best_key.second, std::sqrt(std::max(best, 0.0)),
                      size[best_i] + size[best_j]});
    size[best_i] += size[best_j];
    id[best_i] = n + step;
    alive[best_j] = false;
  }
  return merges;
}

std::vector<int> cut_tree(std::span<const Merge> merges, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw Error(kModule, ErrorKind::validation, "cut size outside 1..n");
  if (merges.size() + 1 != n) throw Error(kModule, ErrorKind::validation, "merge history does not span n units");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s < n - k; ++s) {
    const auto& m = merges[s];
    parent[find(m.cluster_a)] = n + s;
    parent[find(m.cluster_b)] = n + s;
  }
  std::vector<int> labels(n, 0);
  std::vector<int> label_of_root(2 * n - 1, 0);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = label_of_root[find(i)];
    if (l == 0) l = ++next;
    labels[i] = l;
  }
  return labels;
}

std::vector<double> silhouette_widths(const DistanceMatrix& distances, std::span<const int> labels) {
  const auto n = distances.size();
  if (labels.size() != n) throw Error(kModule, ErrorKind::validation, "labels do not cover all units");
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  std::vector<std::size_t> count(static_cast<std::size_t>(k) + 1, 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];
  std::vector<double> s(n, 0.0);
  std::vector<double> sums(static_cast<std::size_t>(k) + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) {
        sums[static_cast<std::size_t>(labels[j])] +=
            distances.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
    const double a = sums[own] / static_cast<double>(count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 1; c < sums.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sums[c] / static_cast<double>(count[c]));
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

double mean_silhouette(const DistanceMatrix& distances, std::span<const int> labels) {
  const auto s = silhouette_widths(distances, labels);
  if (s.empty()) return 0.0;
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

ClusterSolution silhouette_select(const DistanceMatrix& distances, std::span<const Merge> merges,
                                  KRange range) {
  const auto n = static_cast<int>(distances.size());
  const int lo = std::max(range.min, 2);
  const int hi = std::min(range.max, n - 1);
  if (lo > hi) {
    throw Error(kModule, ErrorKind::validation,
                "empty k range [" + std::to_string(range.min) + ", " + std::to_string(range.max) +
                    "] for " + std::to_string(n) + " units");
  }
  ClusterSolution sol;
  sol.unit_ids = distances.unit_ids;
  sol.merges.assign(merges.begin(), merges.end());
  double best = -std::numeric_limits<double>::infinity();
  for (int k = lo; k <= hi; ++k) {
    const auto labels = cut_tree(merges, distances.size(), static_cast<std::size_t>(k));
    const double score = mean_silhouette(distances, labels);
    sol.silhouette_by_k[k] = score;
    if (score > best + 1e-12) {
      best = score;
      sol.chosen_k = k;
      sol.assignments = labels;
    }
  }
  return sol;
}

void write_merges_csv(std::ostream& out, std::span<const Merge> merges) {
  out << "step,cluster_a,cluster_b,height\n";
  for (std::size_t s = 0; s < merges.size(); ++s) {
    out << (s + 1) << ',' << merges[s].cluster_a << ',' << merges[s].cluster_b << ','
        << text::format_double(merges[s].height) << '\n';
  }
}

void write_assignments_csv(std::ostream& out, const ClusterSolution& solution) {
  out << "unit_id,cluster\n";
  for (std::size_t i = 0; i < solution.unit_ids.size(); ++i) {
    out << text::csv_field(solution.unit_ids[i]) << ',' << solution.assignments[i] << '\n';
  }
}

void write_silhouette_csv(std::ostream& out, const ClusterSolution& solution) {
  out << "k,mean_silhouette\n";
  for (const auto& [k, score] : solution.silhouette_by_k) {
    out << k << ',' << text::format_double(score) << '\n';
  }
}

}  // namespace arealstat::cluster
