#include "actiongraph/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "actiongraph/errors.hpp"

namespace ag {

namespace {

double log_edge(const ActionGraph& g, int u, int v) { return std::log(g.p(u, v)); }

PathFeature make_path(const ActionGraph& g, const std::vector<int>& nodes) {
  PathFeature f;
  f.nodes = nodes;
  f.edges = static_cast<int>(nodes.size()) - 1;
  double log_sum = 0.0;
  for (int i = 0; i < f.edges; ++i) log_sum += log_edge(g, nodes[i], nodes[i + 1]);
  f.joint_prob = std::exp(log_sum);
  f.strength = std::exp(log_sum / f.edges);
  return f;
}

// true when a ranks strictly before b
template <typename F>
bool rank_before(const F& a, const F& b, double F::*key) {
  if (a.*key != b.*key) return a.*key > b.*key;
  return a.nodes < b.nodes;
}

// Bounded ranked collector; keeps the top m by the comparator and the total
// number of items offered.
template <typename F, typename Less>
class TopK {
 public:
  TopK(int m, Less less) : m_(m), less_(less) {}
  void offer(F f) {
    ++total_;
    if (m_ <= 0) return;
    auto it = std::lower_bound(items_.begin(), items_.end(), f, less_);
    if (items_.size() < static_cast<std::size_t>(m_)) {
      items_.insert(it, std::move(f));
    } else if (it != items_.end()) {
      items_.insert(it, std::move(f));
      items_.pop_back();
    }
  }
  std::vector<F> take() { return std::move(items_); }
  std::int64_t total() const { return total_; }

 private:
  int m_;
  Less less_;
  std::vector<F> items_;
  std::int64_t total_ = 0;
};

std::vector<std::vector<int>> out_edges(const ActionGraph& g) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n));
  for (int u = 0; u < g.n; ++u)
    for (int v = 0; v < g.n; ++v)
      if (g.p(u, v) > 0.0) adj[static_cast<std::size_t>(u)].push_back(v);
  return adj;
}

}  // namespace

std::vector<double> first_action_dist(const ActionGraph& g, const Alphabet& alphabet) {
  std::vector<double> out(static_cast<std::size_t>(alphabet.action_count()), 0.0);
  for (int a = 0; a < alphabet.action_count(); ++a) {
    out[static_cast<std::size_t>(a)] = g.p(alphabet.start_node(), alphabet.node_of_action(a));
  }
  return out;
}

std::vector<double> last_action_dist(const ActionGraph& g, const Alphabet& alphabet) {
  std::vector<double> out(static_cast<std::size_t>(alphabet.action_count()), 0.0);
  double total = 0.0;
  for (int a = 0; a < alphabet.action_count(); ++a) {
    const double p = g.p(alphabet.node_of_action(a), alphabet.end_node());
    out[static_cast<std::size_t>(a)] = p;
    total += p;
  }
  if (total > 0.0)
    for (double& v : out) v /= total;
  return out;
}

std::vector<PathFeature> k_hop_paths(const ActionGraph& g, const Alphabet& alphabet, int k,
                                     int top_m) {
  if (k < 1) throw UsageError("k_hop_paths: k must be >= 1");
  const auto adj = out_edges(g);
  std::vector<PathFeature> all;
  std::vector<int> walk{alphabet.start_node()};
  std::function<void()> extend = [&]() {
    if (static_cast<int>(walk.size()) == k + 1) {
      all.push_back(make_path(g, walk));
      return;
    }
    for (int v : adj[static_cast<std::size_t>(walk.back())]) {
      walk.push_back(v);
      extend();
      walk.pop_back();
    }
  };
  extend();
  auto less = [](const PathFeature& a, const PathFeature& b) {
    return rank_before(a, b, &PathFeature::joint_prob);
  };
  std::sort(all.begin(), all.end(), less);
  if (top_m >= 0 && static_cast<int>(all.size()) > top_m) all.resize(static_cast<std::size_t>(top_m));
  return all;
}

std::vector<PathFeature> end_to_end_paths(const ActionGraph& g, const Alphabet& alphabet, int cap,
                                          int top_m, std::int64_t* total_found) {
  if (cap < 1) throw UsageError("end_to_end_paths: cap must be >= 1");
  const auto adj = out_edges(g);
  auto less = [](const PathFeature& a, const PathFeature& b) {
    return rank_before(a, b, &PathFeature::strength);
  };
  TopK<PathFeature, decltype(less)> top(top_m, less);
  std::vector<int> walk{alphabet.start_node()};
  std::function<void()> extend = [&]() {
    const int last = walk.back();
    if (last == alphabet.end_node()) {
      top.offer(make_path(g, walk));
      return;
    }
    if (static_cast<int>(walk.size()) > cap) return;
    for (int v : adj[static_cast<std::size_t>(last)]) {
      walk.push_back(v);
      extend();
      walk.pop_back();
    }
  };
  extend();
  if (total_found) *total_found = top.total();
  return top.take();
}

void enumerate_elementary_cycles(const ActionGraph& g, const Alphabet& alphabet,
                                 const std::function<void(const std::vector<int>&)>& fn) {
  // Self-loops are emitted first as length-1 cycles; the Johnson search below
  // runs on the self-loop-free subgraph of action nodes.
  const int first = alphabet.start_node() + 1;
  const int last = alphabet.end_node();  // exclusive
  std::vector<int> cycle;
  for (int v = first; v < last; ++v) {
    if (g.p(v, v) > 0.0) {
      cycle = {v, v};
      fn(cycle);
    }
  }

  const int n = last - first;  // action node count
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && g.p(first + u, first + v) > 0.0) adj[static_cast<std::size_t>(u)].push_back(v);

  std::vector<bool> blocked(static_cast<std::size_t>(n), false);
  std::vector<std::set<int>> block_list(static_cast<std::size_t>(n));
  std::vector<int> stack;
  std::vector<bool> in_scope(static_cast<std::size_t>(n), false);

  std::function<void(int)> unblock = [&](int v) {
    blocked[static_cast<std::size_t>(v)] = false;
    auto pending = std::move(block_list[static_cast<std::size_t>(v)]);
    block_list[static_cast<std::size_t>(v)].clear();
    for (int u : pending)
      if (blocked[static_cast<std::size_t>(u)]) unblock(u);
  };

  std::function<bool(int, int)> circuit = [&](int v, int s) -> bool {
    bool found = false;
    stack.push_back(v);
    blocked[static_cast<std::size_t>(v)] = true;
    for (int w : adj[static_cast<std::size_t>(v)]) {
      if (!in_scope[static_cast<std::size_t>(w)]) continue;
      if (w == s) {
        cycle.clear();
        for (int x : stack) cycle.push_back(first + x);
        cycle.push_back(first + s);
        fn(cycle);
        found = true;
      } else if (!blocked[static_cast<std::size_t>(w)]) {
        if (circuit(w, s)) found = true;
      }
    }
    if (found) {
      unblock(v);
    } else {
      for (int w : adj[static_cast<std::size_t>(v)]) {
        if (in_scope[static_cast<std::size_t>(w)]) block_list[static_cast<std::size_t>(w)].insert(v);
      }
    }
    stack.pop_back();
    return found;
  };

  // For each root s ascending, search the subgraph induced on {s..n-1}; every
  // cycle is reported exactly once with its least node first.
  for (int s = 0; s < n; ++s) {
    for (int v = 0; v < n; ++v) {
      in_scope[static_cast<std::size_t>(v)] = v >= s;
      blocked[static_cast<std::size_t>(v)] = false;
      block_list[static_cast<std::size_t>(v)].clear();
    }
    circuit(s, s);
  }
}

std::vector<CycleFeature> strongest_cycles(const ActionGraph& g, const Alphabet& alphabet,
                                           int top_m, std::int64_t* total_found) {
  auto less = [](const CycleFeature& a, const CycleFeature& b) {
    return rank_before(a, b, &CycleFeature::strength);
  };
  TopK<CycleFeature, decltype(less)> top(top_m, less);
  enumerate_elementary_cycles(g, alphabet, [&](const std::vector<int>& nodes) {
    CycleFeature f;
    f.nodes = nodes;
    f.edges = static_cast<int>(nodes.size()) - 1;
    double log_sum = 0.0;
    for (int i = 0; i < f.edges; ++i) log_sum += log_edge(g, nodes[i], nodes[i + 1]);
    f.joint_prob = std::exp(log_sum);
    f.strength = std::exp(log_sum / f.edges);
    top.offer(std::move(f));
  });
  if (total_found) *total_found = top.total();
  return top.take();
}

std::map<std::vector<int>, double> ngram_paths(const std::vector<Session>& sessions,
                                               const Alphabet& alphabet, int n) {
  if (n < 2) throw UsageError("ngram_paths: n must be >= 2");
  std::map<std::vector<int>, std::int64_t> counts;
  std::int64_t total = 0;
  std::vector<int> padded;
  for (const Session& s : sessions) {
    padded.clear();
    padded.push_back(alphabet.start_node());
    for (int a : s.actions) padded.push_back(alphabet.node_of_action(a));
    padded.push_back(alphabet.end_node());
    if (static_cast<int>(padded.size()) < n) continue;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      ++counts[std::vector<int>(padded.begin() + static_cast<std::ptrdiff_t>(i),
                                padded.begin() + static_cast<std::ptrdiff_t>(i + n))];
      ++total;
    }
  }
  std::map<std::vector<int>, double> out;
  if (total == 0) return out;
  for (const auto& [gram, c] : counts) {
    out[gram] = static_cast<double>(c) / static_cast<double>(total);
  }
  return out;
}

std::string gram_to_string(const std::vector<int>& nodes, const Alphabet& alphabet) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += " → ";
    out += alphabet.node_name(nodes[i]);
  }
  return out;
}

FeatureSchema FeatureSchema::build(const FeatureConfig& config, const Alphabet& alphabet) {
  FeatureSchema s;
  if (config.include_macro) {
    s.names = {"sessions_per_day", "avg_session_seconds", "gender",
               "max_age",          "friend_count",        "profile_missing"};
  }
  if (config.include_graph) {
    for (const std::string& a : alphabet.action_names()) s.names.push_back("first_" + a);
    for (const std::string& a : alphabet.action_names()) s.names.push_back("last_" + a);
    s.names.push_back("graph_nodes");
    s.names.push_back("graph_edges");
    s.names.push_back("graph_density");
    for (int k : config.khop_ks) {
      for (int i = 1; i <= config.path_top_m; ++i) {
        s.names.push_back("khop" + std::to_string(k) + "_top" + std::to_string(i));
      }
    }
    for (int i = 1; i <= config.path_top_m; ++i) s.names.push_back("e2e_top" + std::to_string(i));
    s.names.push_back("e2e_count");
    for (int i = 1; i <= config.cycle_top_m; ++i)
      s.names.push_back("cycle_top" + std::to_string(i));
    s.names.push_back("cycle_count");
  }
  if (config.include_ngrams) {
    for (int n : config.ngram_ns) {
      for (int i = 1; i <= config.ngram_top_m; ++i) {
        s.names.push_back("ngram" + std::to_string(n) + "_top" + std::to_string(i));
      }
    }
  }
  return s;
}

std::vector<double> assemble_features(const UserActivity& user, const ActionGraph& static_graph,
                                      const FeatureConfig& config, const Alphabet& alphabet) {
  std::vector<double> out;
  if (config.include_macro) {
    const MacroProfile& m = user.macro;
    out.insert(out.end(), {m.sessions_per_day, m.avg_session_seconds, m.gender, m.max_age,
                           m.friend_count, m.profile_missing ? 1.0 : 0.0});
  }
  if (config.include_graph) {
    const auto first = first_action_dist(static_graph, alphabet);
    const auto last = last_action_dist(static_graph, alphabet);
    out.insert(out.end(), first.begin(), first.end());
    out.insert(out.end(), last.begin(), last.end());
    const GraphMetrics gm = graph_metrics(static_graph);
    out.push_back(gm.node_count);
    out.push_back(gm.edge_count);
    out.push_back(gm.density);
    auto push_ranked = [&out](const auto& items, int m, auto key) {
      for (int i = 0; i < m; ++i) {
        out.push_back(i < static_cast<int>(items.size()) ? items[static_cast<std::size_t>(i)].*key
                                                         : 0.0);
      }
    };
    for (int k : config.khop_ks) {
      push_ranked(k_hop_paths(static_graph, alphabet, k, config.path_top_m), config.path_top_m,
                  &PathFeature::strength);
    }
    std::int64_t e2e_total = 0;
    push_ranked(
        end_to_end_paths(static_graph, alphabet, config.e2e_cap, config.path_top_m, &e2e_total),
        config.path_top_m, &PathFeature::strength);
    out.push_back(static_cast<double>(e2e_total));
    std::int64_t cycle_total = 0;
    push_ranked(strongest_cycles(static_graph, alphabet, config.cycle_top_m, &cycle_total),
                config.cycle_top_m, &CycleFeature::strength);
    out.push_back(static_cast<double>(cycle_total));
  }
  if (config.include_ngrams) {
    for (int n : config.ngram_ns) {
      const auto freqs = ngram_paths(user.sessions, alphabet, n);
      std::vector<std::pair<double, const std::vector<int>*>> ranked;
      ranked.reserve(freqs.size());
      for (const auto& [gram, f] : freqs) ranked.emplace_back(f, &gram);
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return *a.second < *b.second;
      });
      for (int i = 0; i < config.ngram_top_m; ++i) {
        out.push_back(i < static_cast<int>(ranked.size()) ? ranked[static_cast<std::size_t>(i)].first
                                                          : 0.0);
      }
    }
  }
  return out;
}

NgramVocabulary ngram_vocabulary(const std::vector<std::map<std::vector<int>, double>>& per_user,
                                 int top_m) {
  std::map<std::vector<int>, double> sums;
  for (const auto& user : per_user) {
    for (const auto& [gram, f] : user) sums[gram] += f;
  }
  const double denom = per_user.empty() ? 1.0 : static_cast<double>(per_user.size());
  std::vector<std::pair<double, const std::vector<int>*>> ranked;
  ranked.reserve(sums.size());
  for (auto& [gram, total] : sums) ranked.emplace_back(total / denom, &gram);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  NgramVocabulary vocab;
  for (int i = 0; i < top_m && i < static_cast<int>(ranked.size()); ++i) {
    vocab.grams.push_back(*ranked[static_cast<std::size_t>(i)].second);
    vocab.mean_frequency.push_back(ranked[static_cast<std::size_t>(i)].first);
  }
  return vocab;
}

std::vector<double> ngram_user_vector(const std::map<std::vector<int>, double>& user_freqs,
                                      const NgramVocabulary& vocab) {
  std::vector<double> out(vocab.grams.size(), 0.0);
  for (std::size_t i = 0; i < vocab.grams.size(); ++i) {
    auto it = user_freqs.find(vocab.grams[i]);
    if (it != user_freqs.end()) out[i] = it->second;
  }
  return out;
}

}  // namespace ag
