#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "arealstat/standardize.hpp"

namespace arealstat::cluster {

enum class Metric { mahalanobis, euclidean };

/// Symmetric, zero-diagonal, non-negative n x n distances.
struct DistanceMatrix {
  std::vector<std::string> unit_ids;
  Eigen::MatrixXd values;
  Metric metric = Metric::euclidean;

  std::size_t size() const noexcept { return unit_ids.size(); }
};

struct RidgePolicy {
  double lambda = 1e-8;  // ridge = lambda * trace / p
  double cond_max = 1e12;
};

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;
  double ridge = 0.0;
  double condition_estimate = 0.0;  // after any ridge
};

/// Sample covariance (n - 1) of the columns of `data` (rows are units). A
/// ridge is added when the eigenvalue condition number exceeds `cond_max`.
CovarianceEstimate estimate_covariance(const Eigen::MatrixXd& data, const RidgePolicy& policy = {});
CovarianceEstimate estimate_covariance(const standardize::RateMatrix& matrix,
                                       const RidgePolicy& policy = {});

double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const Eigen::LLT<Eigen::MatrixXd>& covariance_factor);

/// Pairwise Mahalanobis distances via the Cholesky factor L of the
/// covariance: each profile is whitened by solving L z = x, then distances
/// are Euclidean norms of whitened differences.
DistanceMatrix mahalanobis_matrix(const Eigen::MatrixXd& points, const Eigen::MatrixXd& covariance,
                                  std::vector<std::string> unit_ids);
DistanceMatrix mahalanobis_matrix(const standardize::RateMatrix& matrix,
                                  const CovarianceEstimate& covariance);

DistanceMatrix euclidean_matrix(const Eigen::MatrixXd& points, std::vector<std::string> unit_ids);

/// One agglomeration step. Singletons are clusters 0..n-1 and the cluster
/// formed at step s (0-based) is n + s; cluster_a < cluster_b.
struct Merge {
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Ward linkage in the Ward.D2 convention: Lance-Williams updates on squared
/// distances, heights reported unsquared. Ties go to the pair with the
/// smallest (min id, max id).
std::vector<Merge> ward_cluster(const DistanceMatrix& distances);

/// Labels 1..k after applying the first n - k merges. Labels follow the
/// order of each cluster's first member.
std::vector<int> cut_tree(std::span<const Merge> merges, std::size_t n, std::size_t k);

/// Per-unit silhouette widths; units in singleton clusters score 0.
std::vector<double> silhouette_widths(const DistanceMatrix& distances, std::span<const int> labels);
double mean_silhouette(const DistanceMatrix& distances, std::span<const int> labels);

struct KRange {
  int min = 2;
  int max = 10;
};

struct ClusterSolution {
  std::vector<std::string> unit_ids;
  std::vector<Merge> merges;
  std::map<int, double> silhouette_by_k;
  int chosen_k = 0;
  std::vector<int> assignments;  // aligned with unit_ids
};

/// Scans k over `range` clipped to [2, n - 1] and keeps the k with the
/// largest mean silhouette; scores within 1e-12 count as ties and the
/// smaller k wins.
ClusterSolution silhouette_select(const DistanceMatrix& distances, std::span<const Merge> merges,
                                  KRange range = {});

void write_merges_csv(std::ostream& out, std::span<const Merge> merges);
void write_assignments_csv(std::ostream& out, const ClusterSolution& solution);
void write_silhouette_csv(std::ostream& out, const ClusterSolution& solution);

}  // namespace arealstat::cluster
