#pragma once

#include <cstdint>
#include <vector>

#include "actiongraph/alphabet.hpp"
#include "actiongraph/events.hpp"

namespace ag {

/// Per-user transition-probability digraph over the canonical node layout.
/// `counts` holds raw transition counts; `prob` is the row-normalized version
/// (rows with zero out-count stay all-zero).
struct ActionGraph {
  int n = 0;
  std::vector<double> prob;          // n*n row-major
  std::vector<std::int64_t> counts;  // n*n row-major

  ActionGraph() = default;
  explicit ActionGraph(int nodes)
      : n(nodes), prob(static_cast<std::size_t>(nodes) * nodes, 0.0),
        counts(static_cast<std::size_t>(nodes) * nodes, 0) {}

  double p(int u, int v) const { return prob[static_cast<std::size_t>(u) * n + v]; }
  double& p(int u, int v) { return prob[static_cast<std::size_t>(u) * n + v]; }
  std::int64_t c(int u, int v) const { return counts[static_cast<std::size_t>(u) * n + v]; }
  std::int64_t& c(int u, int v) { return counts[static_cast<std::size_t>(u) * n + v]; }

  bool zero() const {
    for (std::int64_t v : counts)
      if (v != 0) return false;
    return true;
  }
};

struct GraphMetrics {
  int node_count = 0;  // nodes with any incident positive edge
  int edge_count = 0;  // directed edges with positive probability
  double density = 0.0;  // edge_count / (n*(n-1)) over realized nodes
};

/// Builds the static graph from all given sessions: each session contributes
/// SESSION_START -> first action, consecutive action pairs, and last action ->
/// SESSION_END. Throws DataError on an empty session list.
ActionGraph build_static(const std::vector<Session>& sessions, const Alphabet& alphabet);

/// One graph per day in [0, observation_days); days without sessions yield the
/// all-zero graph so the temporal sequence always has fixed length.
std::vector<ActionGraph> build_temporal(const std::vector<Session>& sessions,
                                        const Alphabet& alphabet, int observation_days);

GraphMetrics graph_metrics(const ActionGraph& g);

}  // namespace ag
