#pragma once

#include <cstdint>
#include <vector>

namespace ag {

struct ClusterModel {
  int k = 0;
  int dim = 0;
  std::vector<double> centers;  // k x dim, row-major
  std::vector<int> assignment;  // per point
  double silhouette = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> objective_history;  // SSE after each Lloyd assignment
};

/// k-means++ seeding followed by Lloyd iterations until the max center shift
/// drops below 1e-6 or 300 iterations. Nearest-center ties go to the lowest
/// center index. The SSE history is guaranteed non-increasing.
ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed);

/// Best-of-n_init kmeans runs by final SSE (derived seeds); used by choose_k.
ClusterModel kmeans_best(const std::vector<std::vector<double>>& points, int k,
                         std::uint64_t seed, int n_init = 5);

/// Mean silhouette over points, Euclidean; singleton-cluster points score 0,
/// as do points where both mean distances are 0. Requires >= 2 nonempty
/// clusters.
double silhouette_score(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& assignment);

/// argmax of the silhouette over k in [k_min, k_max] (clamped to the point
/// count); ties resolve to the smaller k.
int choose_k(const std::vector<std::vector<double>>& points, int k_min = 2, int k_max = 8,
             std::uint64_t seed = 0);

struct ClusterEngagementRow {
  int cluster = 0;
  int size = 0;
  double mean_rate = 0.0;
  double std_rate = 0.0;
};

/// Per-cluster mean and population standard deviation of the future active
/// rate, ranked by mean descending.
std::vector<ClusterEngagementRow> cluster_engagement_profile(const std::vector<int>& assignment,
                                                             const std::vector<double>& rates);

}  // namespace ag
