#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace kc::discovery {

struct KMeansResult {
  std::vector<Eigen::VectorXd> centroids;
  std::vector<std::size_t> assignments;
  // Inertia of each assignment step against the centroids it was made from.
  std::vector<double> inertia_trace;
  std::size_t iterations = 0;
  bool converged = false;  // assignment reached a fixpoint before max_iters
};

// Index of the nearest centroid by squared Euclidean distance; ties go to
// the smallest index.
std::size_t nearest_centroid(const std::vector<Eigen::VectorXd>& centroids, const Eigen::VectorXd& z);

double inertia(const std::vector<Eigen::VectorXd>& points, const std::vector<Eigen::VectorXd>& centroids,
               const std::vector<std::size_t>& assignments);

// k-means++ seeding followed by Lloyd iterations until the assignment stops
// changing or max_iters is reached. A cluster left empty after an
// assignment step is reseeded, in index order, to the point farthest from
// its current centroid (ties: smallest point index), and that point's
// distance is then taken as zero for any later empty cluster.
// Throws DataError when there are fewer than k points or fewer than k
// distinct points, UsageError when k == 0.
KMeansResult kmeans_fit(const std::vector<Eigen::VectorXd>& points, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters = 300);

}  // namespace kc::discovery
