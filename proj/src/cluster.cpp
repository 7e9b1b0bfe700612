#include "actiongraph/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sse(const std::vector<std::vector<double>>& points, const std::vector<double>& centers,
           const std::vector<int>& assignment, int dim) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += sq_dist(points[i].data(),
                     centers.data() + static_cast<std::size_t>(assignment[i]) * dim, dim);
  }
  return total;
}

}  // namespace

ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed) {
  if (k < 1) throw UsageError("kmeans: k must be >= 1");
  const int n = static_cast<int>(points.size());
  if (n < k) throw UsageError("kmeans: fewer points than clusters");
  const int dim = static_cast<int>(points.front().size());

  ClusterModel model;
  model.k = k;
  model.dim = dim;
  model.seed = seed;
  model.centers.assign(static_cast<std::size_t>(k) * dim, 0.0);
  model.assignment.assign(static_cast<std::size_t>(n), 0);

  // k-means++ seeding; duplicate-heavy data falls back to unchosen indices so
  // k distinct points always yield k distinct centers.
  Rng rng(splitmix64(seed ^ 0xc1a5ULL));
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
  std::vector<int> center_idx;
  int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  center_idx.push_back(first);
  chosen[static_cast<std::size_t>(first)] = true;
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j : center_idx) {
        best = std::min(best, sq_dist(points[static_cast<std::size_t>(i)].data(),
                                      points[static_cast<std::size_t>(j)].data(), dim));
      }
      d2[static_cast<std::size_t>(i)] = chosen[static_cast<std::size_t>(i)] ? 0.0 : best;
      total += d2[static_cast<std::size_t>(i)];
    }
    int pick = -1;
    if (total > 0.0) {
      double u = rng.uniform01() * total;
      for (int i = 0; i < n; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u < 0.0 && !chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      for (int i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    center_idx.push_back(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
  }
  for (int c = 0; c < k; ++c) {
    std::copy(points[static_cast<std::size_t>(center_idx[static_cast<std::size_t>(c)])].begin(),
              points[static_cast<std::size_t>(center_idx[static_cast<std::size_t>(c)])].end(),
              model.centers.begin() + static_cast<std::size_t>(c) * dim);
  }

  std::vector<double> next(static_cast<std::size_t>(k) * dim);
  std::vector<int> sizes(static_cast<std::size_t>(k));
  for (int iter = 0; iter < 300; ++iter) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(points[static_cast<std::size_t>(i)].data(),
                                 model.centers.data() + static_cast<std::size_t>(c) * dim, dim);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      model.assignment[static_cast<std::size_t>(i)] = arg;
    }
    model.objective_history.push_back(sse(points, model.centers, model.assignment, dim));

    std::fill(next.begin(), next.end(), 0.0);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = model.assignment[static_cast<std::size_t>(i)];
      ++sizes[static_cast<std::size_t>(c)];
      for (int d = 0; d < dim; ++d) {
        next[static_cast<std::size_t>(c) * dim + d] += points[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
      }
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] == 0) {
        // Re-seed an empty cluster with the point farthest from its center.
        double worst = -1.0;
        int worst_i = 0;
        for (int i = 0; i < n; ++i) {
          const int a = model.assignment[static_cast<std::size_t>(i)];
          const double d = sq_dist(points[static_cast<std::size_t>(i)].data(),
                                   model.centers.data() + static_cast<std::size_t>(a) * dim, dim);
          if (d > worst) {
            worst = d;
            worst_i = i;
          }
        }
        std::copy(points[static_cast<std::size_t>(worst_i)].begin(),
                  points[static_cast<std::size_t>(worst_i)].end(),
                  next.begin() + static_cast<std::size_t>(c) * dim);
        sizes[static_cast<std::size_t>(c)] = 1;
      } else {
        for (int d = 0; d < dim; ++d) {
          next[static_cast<std::size_t>(c) * dim + d] /= sizes[static_cast<std::size_t>(c)];
        }
      }
    }
    double shift = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      shift = std::max(shift, std::abs(next[i] - model.centers[i]));
    }
    model.centers = next;
    if (shift < 1e-6) break;
  }
  // Final assignment against the converged centers.
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < k; ++c) {
      const double d = sq_dist(points[static_cast<std::size_t>(i)].data(),
                               model.centers.data() + static_cast<std::size_t>(c) * dim, dim);
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    model.assignment[static_cast<std::size_t>(i)] = arg;
  }
  model.objective_history.push_back(sse(points, model.centers, model.assignment, dim));
  return model;
}

ClusterModel kmeans_best(const std::vector<std::vector<double>>& points, int k,
                         std::uint64_t seed, int n_init) {
  ClusterModel best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n_init; ++r) {
    ClusterModel m = kmeans(points, k, splitmix64(seed + static_cast<std::uint64_t>(r) * 7919));
    const double s = m.objective_history.back();
    if (s < best_sse) {
      best_sse = s;
      best = std::move(m);
    }
  }
  best.seed = seed;
  return best;
}

double silhouette_score(const std::vector<std::vector<double>>& points,
                        const std::vector<int>& assignment) {
  const int n = static_cast<int>(points.size());
  if (n == 0 || assignment.size() != points.size()) {
    throw UsageError("silhouette: assignment/point mismatch");
  }
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment) {
    if (a < 0) throw UsageError("silhouette: negative cluster id");
    ++sizes[static_cast<std::size_t>(a)];
  }
  int nonempty = 0;
  for (int s : sizes)
    if (s > 0) ++nonempty;
  if (nonempty < 2) throw UsageError("silhouette: needs at least 2 clusters");

  const int dim = static_cast<int>(points.front().size());
  double total = 0.0;
  std::vector<double> mean_dist(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    const int own = assignment[static_cast<std::size_t>(i)];
    if (sizes[static_cast<std::size_t>(own)] == 1) continue;  // singleton scores 0
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      mean_dist[static_cast<std::size_t>(assignment[static_cast<std::size_t>(j)])] +=
          std::sqrt(sq_dist(points[static_cast<std::size_t>(i)].data(),
                            points[static_cast<std::size_t>(j)].data(), dim));
    }
    const double a =
        mean_dist[static_cast<std::size_t>(own)] / (sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, mean_dist[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / n;
}

int choose_k(const std::vector<std::vector<double>>& points, int k_min, int k_max,
             std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k_min < 2) throw UsageError("choose_k: k_min must be >= 2");
  k_max = std::min(k_max, n);
  if (k_max < k_min) throw UsageError("choose_k: range is empty for this point count");
  int best_k = k_min;
  double best_score = -2.0;
  for (int k = k_min; k <= k_max; ++k) {
    const ClusterModel m = kmeans_best(points, k, splitmix64(seed ^ (static_cast<std::uint64_t>(k) << 32)));
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int a : m.assignment) ++sizes[static_cast<std::size_t>(a)];
    int nonempty = 0;
    for (int s : sizes)
      if (s > 0) ++nonempty;
    // Degenerate fits (duplicate-heavy data collapsing clusters) score 0.
    const double s = nonempty >= 2 ? silhouette_score(points, m.assignment) : 0.0;
    if (s > best_score) {
      best_score = s;
      best_k = k;
    }
  }
  return best_k;
}

std::vector<ClusterEngagementRow> cluster_engagement_profile(const std::vector<int>& assignment,
                                                             const std::vector<double>& rates) {
  if (assignment.size() != rates.size()) {
    throw UsageError("cluster_engagement_profile: assignment/rate size mismatch");
  }
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  std::vector<ClusterEngagementRow> rows(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) rows[static_cast<std::size_t>(c)].cluster = c;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto& r = rows[static_cast<std::size_t>(assignment[i])];
    ++r.size;
    r.mean_rate += rates[i];
  }
  for (auto& r : rows) {
    if (r.size > 0) r.mean_rate /= r.size;
  }
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto& r = rows[static_cast<std::size_t>(assignment[i])];
    const double d = rates[i] - r.mean_rate;
    r.std_rate += d * d;
  }
  std::vector<ClusterEngagementRow> out;
  for (auto& r : rows) {
    if (r.size == 0) continue;
    r.std_rate = std::sqrt(r.std_rate / r.size);
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.mean_rate != b.mean_rate) return a.mean_rate > b.mean_rate;
    return a.cluster < b.cluster;
  });
  return out;
}

}  // namespace ag
