#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "actiongraph/errors.hpp"
#include "actiongraph/features.hpp"
#include "actiongraph/rng.hpp"

using namespace ag;

namespace {

const Alphabet& alpha() { return Alphabet::defaults(); }

Alphabet small_alphabet(int n_actions) {
  std::vector<std::string> names;
  for (int i = 0; i < n_actions; ++i) names.push_back("ACT_" + std::string(1, char('A' + i)));
  return Alphabet(names);
}

// Row-stochastic random graph honoring the START/END structural constraints.
// counts mirror the support so the A>0 <=> C>0 invariant holds.
ActionGraph random_graph(const Alphabet& a, Rng& rng, double edge_prob) {
  ActionGraph g(a.node_count());
  const int start = a.start_node(), end = a.end_node();
  for (int u = 0; u < g.n; ++u) {
    if (u == end) continue;
    std::vector<double> w(static_cast<std::size_t>(g.n), 0.0);
    double total = 0.0;
    for (int v = 0; v < g.n; ++v) {
      if (v == start) continue;
      if (u == start && v == end) continue;  // START -> END never happens
      if (rng.uniform01() < edge_prob) {
        w[static_cast<std::size_t>(v)] = 0.05 + rng.uniform01();
        total += w[static_cast<std::size_t>(v)];
      }
    }
    if (total == 0.0 && u == start) {
      // START must reach at least one action.
      const int v = a.node_of_action(static_cast<int>(rng.below(a.action_count())));
      w[static_cast<std::size_t>(v)] = 1.0;
      total = 1.0;
    }
    if (total == 0.0) continue;
    for (int v = 0; v < g.n; ++v) {
      if (w[static_cast<std::size_t>(v)] > 0.0) {
        g.p(u, v) = w[static_cast<std::size_t>(v)] / total;
        g.c(u, v) = 1;
      }
    }
  }
  return g;
}

ActionGraph graph_from_edges(const Alphabet& a,
                             std::initializer_list<std::tuple<int, int, double>> edges) {
  ActionGraph g(a.node_count());
  for (const auto& [u, v, p] : edges) {
    g.p(u, v) = p;
    g.c(u, v) = 1;
  }
  return g;
}

// Oracle: exhaustive recursive enumeration of k-edge walks from START.
void walk_oracle(const ActionGraph& g, int k, std::vector<int>& walk,
                 std::map<std::vector<int>, double>& out) {
  if (static_cast<int>(walk.size()) == k + 1) {
    double p = 1.0;
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) p *= g.p(walk[i], walk[i + 1]);
    out[walk] = p;
    return;
  }
  for (int v = 0; v < g.n; ++v) {
    if (g.p(walk.back(), v) > 0.0) {
      walk.push_back(v);
      walk_oracle(g, k, walk, out);
      walk.pop_back();
    }
  }
}

// Oracle: depth-capped DFS over START -> ... -> END walks.
void e2e_oracle(const ActionGraph& g, const Alphabet& a, int cap, std::vector<int>& walk,
                std::map<std::vector<int>, double>& out) {
  if (walk.back() == a.end_node()) {
    double log_p = 0.0;
    for (std::size_t i = 0; i + 1 < walk.size(); ++i) log_p += std::log(g.p(walk[i], walk[i + 1]));
    out[walk] = std::exp(log_p / (static_cast<double>(walk.size()) - 1.0));
    return;
  }
  if (static_cast<int>(walk.size()) > cap) return;
  for (int v = 0; v < g.n; ++v) {
    if (g.p(walk.back(), v) > 0.0) {
      walk.push_back(v);
      e2e_oracle(g, a, cap, walk, out);
      walk.pop_back();
    }
  }
}

// Oracle: brute-force elementary cycles among action nodes, canonical
// min-node-first form, via DFS over distinct vertices >= the root.
std::set<std::vector<int>> cycle_oracle(const ActionGraph& g, const Alphabet& a) {
  std::set<std::vector<int>> cycles;
  const int first = a.start_node() + 1, last = a.end_node();
  for (int v = first; v < last; ++v) {
    if (g.p(v, v) > 0.0) cycles.insert({v, v});
  }
  std::vector<int> path;
  std::vector<bool> used(static_cast<std::size_t>(a.node_count()), false);
  std::function<void(int, int)> dfs = [&](int v, int root) {
    for (int w = first; w < last; ++w) {
      if (w == v || g.p(v, w) <= 0.0) continue;
      if (w == root && path.size() >= 2) {
        auto cycle = path;
        cycle.push_back(root);
        cycles.insert(cycle);
      } else if (w > root && !used[static_cast<std::size_t>(w)]) {
        used[static_cast<std::size_t>(w)] = true;
        path.push_back(w);
        dfs(w, root);
        path.pop_back();
        used[static_cast<std::size_t>(w)] = false;
      }
    }
  };
  for (int root = first; root < last; ++root) {
    path = {root};
    std::fill(used.begin(), used.end(), false);
    used[static_cast<std::size_t>(root)] = true;
    dfs(root, root);
  }
  return cycles;
}

Session make_session(std::vector<int> actions, int day = 0) {
  Session s;
  s.day = day;
  s.actions = std::move(actions);
  return s;
}

}  // namespace

TEST_CASE("first_action_dist is the START row over actions") {
  const Alphabet& a = alpha();
  auto g = graph_from_edges(a, {{a.start_node(), a.node_of_action(0), 0.7},
                                {a.start_node(), a.node_of_action(1), 0.3},
                                {a.node_of_action(0), a.end_node(), 1.0},
                                {a.node_of_action(1), a.end_node(), 1.0}});
  const auto dist = first_action_dist(g, a);
  CHECK(dist[0] == doctest::Approx(0.7));
  CHECK(dist[1] == doctest::Approx(0.3));
  double total = 0.0;
  for (double v : first_action_dist(ActionGraph(a.node_count()), a)) total += v;
  CHECK(total == 0.0);
}

TEST_CASE("first_action_dist matches session-first-element frequencies") {
  Rng rng(31);
  std::vector<Session> sessions;
  std::vector<int> first_counts(10, 0);
  for (int i = 0; i < 400; ++i) {
    std::vector<int> actions;
    const int len = 1 + static_cast<int>(rng.below(5));
    for (int j = 0; j < len; ++j) actions.push_back(static_cast<int>(rng.below(10)));
    ++first_counts[static_cast<std::size_t>(actions[0])];
    sessions.push_back(make_session(std::move(actions)));
  }
  const auto g = build_static(sessions, alpha());
  const auto dist = first_action_dist(g, alpha());
  for (int a = 0; a < 10; ++a) {
    CHECK(dist[static_cast<std::size_t>(a)] ==
          doctest::Approx(first_counts[static_cast<std::size_t>(a)] / 400.0).epsilon(1e-12));
  }
}

TEST_CASE("last_action_dist renormalizes the END column") {
  const Alphabet& a = alpha();
  SUBCASE("single ending action is one-hot") {
    auto g = graph_from_edges(a, {{a.node_of_action(1), a.end_node(), 1.0}});
    const auto dist = last_action_dist(g, a);
    CHECK(dist[1] == doctest::Approx(1.0));
  }
  SUBCASE("0.5 and 1.0 renormalize to 1/3 and 2/3") {
    auto g = graph_from_edges(a, {{a.node_of_action(0), a.end_node(), 0.5},
                                  {a.node_of_action(0), a.node_of_action(1), 0.5},
                                  {a.node_of_action(1), a.end_node(), 1.0}});
    const auto dist = last_action_dist(g, a);
    CHECK(dist[0] == doctest::Approx(1.0 / 3.0));
    CHECK(dist[1] == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("matches session-last-element counter after renormalization") {
    Rng rng(77);
    std::vector<Session> sessions;
    for (int i = 0; i < 300; ++i) {
      std::vector<int> actions;
      const int len = 1 + static_cast<int>(rng.below(6));
      for (int j = 0; j < len; ++j) actions.push_back(static_cast<int>(rng.below(10)));
      sessions.push_back(make_session(std::move(actions)));
    }
    const auto g = build_static(sessions, alpha());
    const auto dist = last_action_dist(g, alpha());
    // Oracle: P(session ends at a) proportional to P(END | a) renormalized.
    std::vector<double> oracle(10, 0.0);
    double total = 0.0;
    for (int act = 0; act < 10; ++act) {
      oracle[static_cast<std::size_t>(act)] = g.p(a.node_of_action(act), a.end_node());
      total += oracle[static_cast<std::size_t>(act)];
    }
    for (int act = 0; act < 10; ++act) {
      CHECK(dist[static_cast<std::size_t>(act)] ==
            doctest::Approx(oracle[static_cast<std::size_t>(act)] / total).epsilon(1e-9));
    }
  }
}

TEST_CASE("k_hop_paths enumerates walks with joint probabilities") {
  const Alphabet& a = alpha();
  const int START = a.start_node(), END = a.end_node();
  const int nA = a.node_of_action(0), nB = a.node_of_action(1);
  auto g = graph_from_edges(a, {{START, nA, 1.0}, {nA, nB, 0.5}, {nA, END, 0.5},
                                {nB, END, 1.0}});
  const auto paths = k_hop_paths(g, a, 2, 10);
  REQUIRE(paths.size() == 2);
  CHECK(paths[0].nodes == std::vector<int>{START, nA, nB});
  CHECK(paths[0].joint_prob == doctest::Approx(0.5));
  CHECK(paths[1].nodes == std::vector<int>{START, nA, END});
  CHECK(paths[1].joint_prob == doctest::Approx(0.5));
  // Tie broken lexicographically: nB (index 2) < END (index 11).

  SUBCASE("k=1 agrees with first_action_dist") {
    const auto one = k_hop_paths(g, a, 1, 10);
    const auto dist = first_action_dist(g, a);
    for (const auto& p : one) {
      CHECK(p.joint_prob ==
            doctest::Approx(dist[static_cast<std::size_t>(a.action_of_node(p.nodes[1]))]));
    }
  }
}

TEST_CASE("k_hop_paths equals the exhaustive enumeration oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_graph(alpha(), rng, 0.25);
    for (int k = 1; k <= 3; ++k) {
      std::map<std::vector<int>, double> oracle;
      std::vector<int> walk{alpha().start_node()};
      walk_oracle(g, k, walk, oracle);
      const auto got = k_hop_paths(g, alpha(), k, -1);  // unbounded
      REQUIRE(got.size() == oracle.size());
      double sum = 0.0;
      for (const auto& p : got) {
        auto it = oracle.find(p.nodes);
        REQUIRE(it != oracle.end());
        CHECK(p.joint_prob == doctest::Approx(it->second).epsilon(1e-12));
        sum += p.joint_prob;
      }
      // Walk probabilities never exceed total mass 1.
      CHECK(sum <= 1.0 + 1e-9);
      // Ranking is total: joint prob descending, lexicographic tie-break.
      for (std::size_t i = 1; i < got.size(); ++i) {
        const bool ordered = got[i - 1].joint_prob > got[i].joint_prob ||
                             (got[i - 1].joint_prob == got[i].joint_prob &&
                              got[i - 1].nodes < got[i].nodes);
        CHECK(ordered);
      }
    }
  }
}

TEST_CASE("k_hop mass is exactly 1 when no walk is absorbed early") {
  // Graph without END edges below depth k: START->A->B->A... no END reachable.
  const Alphabet& a = alpha();
  const int START = a.start_node();
  const int nA = a.node_of_action(0), nB = a.node_of_action(1);
  auto g = graph_from_edges(a, {{START, nA, 1.0}, {nA, nB, 1.0}, {nB, nA, 1.0}});
  for (int k = 1; k <= 4; ++k) {
    double sum = 0.0;
    for (const auto& p : k_hop_paths(g, a, k, -1)) sum += p.joint_prob;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("end_to_end_paths computes P^(1/N) strengths") {
  const Alphabet& a = alpha();
  const int START = a.start_node(), END = a.end_node();
  const int nA = a.node_of_action(0), nB = a.node_of_action(1);
  auto g = graph_from_edges(a, {{START, nA, 1.0}, {nA, END, 0.5}, {nA, nB, 0.5},
                                {nB, nA, 1.0}});
  const auto paths = end_to_end_paths(g, a, 6, 10);
  REQUIRE(!paths.empty());
  // The walk START -> A -> END carries edges (1.0, 0.5): P = 0.5, N = 2.
  const std::vector<int> direct{START, nA, END};
  bool found = false;
  for (const auto& p : paths) {
    if (p.nodes == direct) {
      found = true;
      CHECK(p.joint_prob == doctest::Approx(0.5));
      CHECK(p.strength == doctest::Approx(0.70710678118654757).epsilon(1e-12));
    }
  }
  CHECK(found);
  // Every B -> A detour multiplies P by 0.25 over two extra edges, so all
  // these walks tie on strength and the tie-break is purely lexicographic.
  for (const auto& p : paths) {
    CHECK(p.strength == doctest::Approx(0.70710678118654757).epsilon(1e-12));
  }

  SUBCASE("strength ranking puts the strongest walk first") {
    auto g2 = graph_from_edges(a, {{START, nA, 1.0}, {nA, END, 0.8}, {nA, nB, 0.2},
                                   {nB, END, 1.0}});
    const auto ranked = end_to_end_paths(g2, a, 6, 10);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].nodes == direct);
    CHECK(ranked[0].strength == doctest::Approx(std::sqrt(0.8)).epsilon(1e-12));
    CHECK(ranked[1].strength == doctest::Approx(std::pow(0.2, 1.0 / 3.0)).epsilon(1e-12));
  }

  SUBCASE("no walk within the cap yields an empty list") {
    auto g2 = graph_from_edges(a, {{START, nA, 1.0}, {nA, nB, 1.0}, {nB, nA, 1.0}});
    CHECK(end_to_end_paths(g2, a, 1, 10).empty());
  }
}

TEST_CASE("end_to_end_paths equals the DFS oracle on random graphs") {
  Rng rng(808);
  for (int trial = 0; trial < 40; ++trial) {
    const auto g = random_graph(alpha(), rng, 0.2);
    std::map<std::vector<int>, double> oracle;
    std::vector<int> walk{alpha().start_node()};
    e2e_oracle(g, alpha(), 6, walk, oracle);
    std::int64_t total = 0;
    const auto got = end_to_end_paths(g, alpha(), 6, static_cast<int>(oracle.size()) + 5, &total);
    REQUIRE(static_cast<std::size_t>(total) == oracle.size());
    REQUIRE(got.size() == oracle.size());
    for (const auto& p : got) {
      auto it = oracle.find(p.nodes);
      REQUIRE(it != oracle.end());
      CHECK(p.strength == doctest::Approx(it->second).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < got.size(); ++i) {
      const bool ordered =
          got[i - 1].strength > got[i].strength ||
          (got[i - 1].strength == got[i].strength && got[i - 1].nodes < got[i].nodes);
      CHECK(ordered);
    }
  }
}

TEST_CASE("strongest_cycles handles 2-cycles and self-loops") {
  const Alphabet& a = alpha();
  const int nA = a.node_of_action(0), nB = a.node_of_action(1);
  SUBCASE("two-node cycle strength is sqrt of the product") {
    auto g = graph_from_edges(a, {{nA, nB, 0.6}, {nB, nA, 0.5}});
    const auto cycles = strongest_cycles(g, a, 10);
    REQUIRE(cycles.size() == 1);
    CHECK(cycles[0].nodes == std::vector<int>{nA, nB, nA});
    CHECK(cycles[0].strength == doctest::Approx(0.54772255750516612).epsilon(1e-12));
  }
  SUBCASE("self-loop is a length-1 cycle with strength = probability") {
    auto g = graph_from_edges(a, {{nA, nA, 0.4}});
    const auto cycles = strongest_cycles(g, a, 10);
    REQUIRE(cycles.size() == 1);
    CHECK(cycles[0].edges == 1);
    CHECK(cycles[0].strength == doctest::Approx(0.4));
  }
  SUBCASE("acyclic graph yields no cycles") {
    auto g = graph_from_edges(a, {{nA, nB, 1.0}});
    CHECK(strongest_cycles(g, a, 10).empty());
  }
}

TEST_CASE("complete 3-node digraph has exactly 5 elementary cycles") {
  const Alphabet a3 = small_alphabet(3);
  ActionGraph g(a3.node_count());
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      if (u == v) continue;
      g.p(a3.node_of_action(u), a3.node_of_action(v)) = 0.5;
      g.c(a3.node_of_action(u), a3.node_of_action(v)) = 1;
    }
  }
  std::int64_t total = 0;
  const auto cycles = strongest_cycles(g, a3, 100, &total);
  CHECK(total == 5);  // 3 two-cycles + 2 three-cycles
  CHECK(cycles.size() == 5);
  CHECK(cycle_oracle(g, a3).size() == 5);
}

TEST_CASE("Johnson enumeration equals brute force on random digraphs up to 8 nodes") {
  Rng rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(6));  // 3..8 action nodes
    const Alphabet a = small_alphabet(n);
    const auto g = random_graph(a, rng, 0.35);
    const auto expected = cycle_oracle(g, a);
    std::set<std::vector<int>> got;
    enumerate_elementary_cycles(g, a, [&](const std::vector<int>& c) { got.insert(c); });
    CHECK(got == expected);
  }
}

TEST_CASE("strength equals exp(mean log edge probability)") {
  Rng rng(5150);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_graph(alpha(), rng, 0.3);
    for (const auto& p : end_to_end_paths(g, alpha(), 6, 50)) {
      double direct = 1.0;
      for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) direct *= g.p(p.nodes[i], p.nodes[i + 1]);
      CHECK(p.strength == doctest::Approx(std::pow(direct, 1.0 / p.edges)).epsilon(1e-12));
      CHECK(p.strength >= p.joint_prob - 1e-15);
      CHECK(p.joint_prob > 0.0);
      CHECK(p.strength <= 1.0 + 1e-12);
    }
    std::int64_t count = 0;
    for (const auto& c : strongest_cycles(g, alpha(), 50, &count)) {
      double direct = 1.0;
      for (std::size_t i = 0; i + 1 < c.nodes.size(); ++i) direct *= g.p(c.nodes[i], c.nodes[i + 1]);
      CHECK(c.strength == doctest::Approx(std::pow(direct, 1.0 / c.edges)).epsilon(1e-12));
    }
  }
}

TEST_CASE("ngram_paths counts sentinel-padded windows normalized per user") {
  const Alphabet& a = alpha();
  const int CV = a.action_index("CHAT_VIEW"), CS = a.action_index("CHAT_SEND");
  const auto freqs = ngram_paths({make_session({CV, CS})}, a, 2);
  REQUIRE(freqs.size() == 3);
  const std::vector<int> w1{a.start_node(), a.node_of_action(CV)};
  const std::vector<int> w2{a.node_of_action(CV), a.node_of_action(CS)};
  const std::vector<int> w3{a.node_of_action(CS), a.end_node()};
  CHECK(freqs.at(w1) == doctest::Approx(1.0 / 3.0));
  CHECK(freqs.at(w2) == doctest::Approx(1.0 / 3.0));
  CHECK(freqs.at(w3) == doctest::Approx(1.0 / 3.0));

  CHECK(gram_to_string({a.node_of_action(CV), a.node_of_action(CS), a.node_of_action(CV)}, a) ==
        "CHAT_VIEW → CHAT_SEND → CHAT_VIEW");
}

TEST_CASE("ngram_paths equals a sliding-window recount oracle") {
  Rng rng(999);
  std::vector<Session> sessions;
  for (int i = 0; i < 60; ++i) {
    std::vector<int> actions;
    const int len = 1 + static_cast<int>(rng.below(7));
    for (int j = 0; j < len; ++j) actions.push_back(static_cast<int>(rng.below(10)));
    sessions.push_back(make_session(std::move(actions)));
  }
  for (int n : {2, 3, 4}) {
    std::map<std::vector<int>, std::int64_t> counts;
    std::int64_t total = 0;
    for (const auto& s : sessions) {
      std::vector<int> padded{alpha().start_node()};
      for (int act : s.actions) padded.push_back(alpha().node_of_action(act));
      padded.push_back(alpha().end_node());
      for (std::size_t i = 0; i + n <= padded.size(); ++i) {
        ++counts[std::vector<int>(padded.begin() + static_cast<std::ptrdiff_t>(i),
                                  padded.begin() + static_cast<std::ptrdiff_t>(i + n))];
        ++total;
      }
    }
    const auto got = ngram_paths(sessions, alpha(), n);
    REQUIRE(got.size() == counts.size());
    for (const auto& [gram, c] : counts) {
      CHECK(got.at(gram) ==
            doctest::Approx(static_cast<double>(c) / static_cast<double>(total)).epsilon(1e-12));
    }
  }
}

TEST_CASE("assemble_features follows the schema") {
  UserActivity user;
  user.user_id = "u";
  user.macro.sessions_per_day = 0.5;
  user.macro.avg_session_seconds = 12.0;
  user.macro.profile_missing = true;
  user.sessions = {make_session({0, 1}), make_session({0})};
  const auto g = build_static(user.sessions, alpha());

  SUBCASE("macro-only yields the 6-slot vector") {
    FeatureConfig fc;
    fc.include_graph = false;
    const auto v = assemble_features(user, g, fc, alpha());
    CHECK(v.size() == 6);
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[5] == 1.0);
    CHECK(FeatureSchema::build(fc, alpha()).size() == 6);
  }

  SUBCASE("identical inputs produce identical vectors") {
    FeatureConfig fc;
    const auto v1 = assemble_features(user, g, fc, alpha());
    const auto v2 = assemble_features(user, g, fc, alpha());
    CHECK(v1 == v2);
  }

  SUBCASE("vector length equals the schema length for random users") {
    Rng rng(2468);
    FeatureConfig fc;
    fc.include_ngrams = true;
    const FeatureSchema schema = FeatureSchema::build(fc, alpha());
    // Schema-walk oracle: macro(6) + dists(2*10) + metrics(3)
    //   + khop(3*10) + e2e(10+1) + cycles(10+1) + ngrams(2*10).
    CHECK(schema.size() == 6 + 20 + 3 + 30 + 11 + 11 + 20);
    for (int trial = 0; trial < 100; ++trial) {
      UserActivity u;
      const int n_sessions = 1 + static_cast<int>(rng.below(10));
      for (int i = 0; i < n_sessions; ++i) {
        std::vector<int> actions;
        const int len = 1 + static_cast<int>(rng.below(6));
        for (int j = 0; j < len; ++j) actions.push_back(static_cast<int>(rng.below(10)));
        u.sessions.push_back(make_session(std::move(actions)));
      }
      const auto ug = build_static(u.sessions, alpha());
      CHECK(assemble_features(u, ug, fc, alpha()).size() ==
            static_cast<std::size_t>(schema.size()));
    }
  }
}
