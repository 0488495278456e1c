#include "kc/discovery/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "kc/common/error.hpp"
#include "kc/common/rng.hpp"

namespace kc::discovery {

namespace {

std::size_t distinct_count(const std::vector<Eigen::VectorXd>& points) {
  std::vector<const Eigen::VectorXd*> sorted;
  for (const auto& p : points) sorted.push_back(&p);
  auto less = [](const Eigen::VectorXd* a, const Eigen::VectorXd* b) {
    return std::lexicographical_compare(a->data(), a->data() + a->size(), b->data(), b->data() + b->size());
  };
  std::sort(sorted.begin(), sorted.end(), less);
  std::size_t n = sorted.empty() ? 0 : 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) n += *sorted[i] != *sorted[i - 1];
  return n;
}

std::vector<Eigen::VectorXd> plus_plus_init(const std::vector<Eigen::VectorXd>& points, std::size_t k,
                                            Rng& rng) {
  std::vector<Eigen::VectorXd> centroids;
  centroids.push_back(points[rng.uniform_index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = (points[i] - centroids[0]).squaredNorm();
  while (centroids.size() < k) {
    double total = 0;
    for (double d : d2) total += d;
    const double r = rng.uniform01() * total;
    std::size_t pick = points.size();
    double acc = 0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (d2[i] <= 0) continue;
      last_positive = i;
      acc += d2[i];
      if (acc > r) {
        pick = i;
        break;
      }
    }
    if (pick == points.size()) pick = last_positive;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i)
      d2[i] = std::min(d2[i], (points[i] - centroids.back()).squaredNorm());
  }
  return centroids;
}

}  // namespace

std::size_t nearest_centroid(const std::vector<Eigen::VectorXd>& centroids, const Eigen::VectorXd& z) {
  if (centroids.empty()) throw UsageError("nearest_centroid: no centroids");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (centroids[c].size() != z.size())
      throw DataError("point dimension " + std::to_string(z.size()) + " does not match centroid dimension " +
                      std::to_string(centroids[c].size()));
    const double d = (centroids[c] - z).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double inertia(const std::vector<Eigen::VectorXd>& points, const std::vector<Eigen::VectorXd>& centroids,
               const std::vector<std::size_t>& assignments) {
  double s = 0;
  for (std::size_t i = 0; i < points.size(); ++i) s += (points[i] - centroids[assignments[i]]).squaredNorm();
  return s;
}

KMeansResult kmeans_fit(const std::vector<Eigen::VectorXd>& points, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters) {
  if (k == 0) throw UsageError("kmeans_fit: k must be positive");
  if (points.size() < k)
    throw DataError("kmeans_fit: " + std::to_string(points.size()) + " points for k = " + std::to_string(k));
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw DataError("kmeans_fit: points differ in dimension");
    if (!p.allFinite()) throw DataError("kmeans_fit: non-finite point");
  }
  const std::size_t distinct = distinct_count(points);
  if (distinct < k)
    throw DataError("kmeans_fit: only " + std::to_string(distinct) + " distinct points for k = " +
                    std::to_string(k));

  Rng rng(seed);
  KMeansResult r;
  r.centroids = plus_plus_init(points, k, rng);
  std::vector<std::size_t> previous;
  const long dim = points.front().size();

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    r.assignments.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) r.assignments[i] = nearest_centroid(r.centroids, points[i]);
    r.inertia_trace.push_back(inertia(points, r.centroids, r.assignments));
    r.iterations = iter + 1;

    std::vector<Eigen::VectorXd> sums(k, Eigen::VectorXd::Zero(dim));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sums[r.assignments[i]] += points[i];
      ++counts[r.assignments[i]];
    }
    const bool has_empty = std::find(counts.begin(), counts.end(), 0u) != counts.end();
    if (!has_empty && r.assignments == previous) {
      r.converged = true;
      break;
    }
    previous = r.assignments;

    std::vector<double> dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      dist[i] = (points[i] - r.centroids[r.assignments[i]]).squaredNorm();
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        r.centroids[c] = sums[c] / static_cast<double>(counts[c]);
        continue;
      }
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      r.centroids[c] = points[far];
      dist[far] = 0.0;
    }
  }
  return r;
}

}  // namespace kc::discovery
