#include "actiongraph/graph.hpp"

#include "actiongraph/errors.hpp"

namespace ag {

namespace {

void add_session(ActionGraph& g, const Session& s, const Alphabet& alphabet) {
  if (s.actions.empty()) return;
  int prev = alphabet.start_node();
  for (int a : s.actions) {
    const int node = alphabet.node_of_action(a);
    ++g.c(prev, node);
    prev = node;
  }
  ++g.c(prev, alphabet.end_node());
}

void normalize_rows(ActionGraph& g) {
  for (int u = 0; u < g.n; ++u) {
    std::int64_t out = 0;
    for (int v = 0; v < g.n; ++v) out += g.c(u, v);
    if (out == 0) continue;
    for (int v = 0; v < g.n; ++v) {
      g.p(u, v) = static_cast<double>(g.c(u, v)) / static_cast<double>(out);
    }
  }
}

}  // namespace

ActionGraph build_static(const std::vector<Session>& sessions, const Alphabet& alphabet) {
  if (sessions.empty()) throw DataError("build_static: no valid sessions");
  ActionGraph g(alphabet.node_count());
  for (const Session& s : sessions) add_session(g, s, alphabet);
  normalize_rows(g);
  return g;
}

std::vector<ActionGraph> build_temporal(const std::vector<Session>& sessions,
                                        const Alphabet& alphabet, int observation_days) {
  if (observation_days < 1) throw UsageError("observation_days must be >= 1");
  std::vector<ActionGraph> graphs(static_cast<std::size_t>(observation_days),
                                  ActionGraph(alphabet.node_count()));
  for (const Session& s : sessions) {
    if (s.day < 0 || s.day >= observation_days) continue;
    add_session(graphs[static_cast<std::size_t>(s.day)], s, alphabet);
  }
  for (ActionGraph& g : graphs) normalize_rows(g);
  return graphs;
}

GraphMetrics graph_metrics(const ActionGraph& g) {
  GraphMetrics m;
  std::vector<bool> touched(static_cast<std::size_t>(g.n), false);
  for (int u = 0; u < g.n; ++u) {
    for (int v = 0; v < g.n; ++v) {
      if (g.p(u, v) > 0.0) {
        ++m.edge_count;
        touched[static_cast<std::size_t>(u)] = true;
        touched[static_cast<std::size_t>(v)] = true;
      }
    }
  }
  for (bool t : touched)
    if (t) ++m.node_count;
  if (m.node_count > 1) {
    m.density = static_cast<double>(m.edge_count) /
                (static_cast<double>(m.node_count) * (m.node_count - 1));
  }
  return m;
}

}  // namespace ag
