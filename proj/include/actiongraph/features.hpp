#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "actiongraph/graph.hpp"

namespace ag {

/// A walk scored by the joint probability of its edges. `strength` is
/// P^(1/N) with N = edge count, computed in log space.
struct PathFeature {
  std::vector<int> nodes;  // node indices, length = edges + 1
  double joint_prob = 0.0;
  double strength = 0.0;
  int edges = 0;
};

/// Elementary cycle among action nodes; nodes.front() == nodes.back().
struct CycleFeature {
  std::vector<int> nodes;
  double joint_prob = 0.0;
  double strength = 0.0;
  int edges = 0;
};

/// Row A[START] restricted to action nodes (index = action index).
std::vector<double> first_action_dist(const ActionGraph& g, const Alphabet& alphabet);

/// Column A[.][END] over action nodes, renormalized by its sum; zero graph
/// yields the zero vector.
std::vector<double> last_action_dist(const ActionGraph& g, const Alphabet& alphabet);

/// All walks of exactly k positive edges from SESSION_START, ranked by joint
/// probability descending with lexicographic node-index tie-break.
std::vector<PathFeature> k_hop_paths(const ActionGraph& g, const Alphabet& alphabet, int k,
                                     int top_m);

/// Walks SESSION_START -> ... -> SESSION_END with at most `cap` edges, ranked
/// by strength descending (ties lexicographic). `total_found`, when given,
/// receives the number of walks enumerated before the top-m cut.
std::vector<PathFeature> end_to_end_paths(const ActionGraph& g, const Alphabet& alphabet,
                                          int cap = 6, int top_m = 10,
                                          std::int64_t* total_found = nullptr);

/// Johnson's algorithm over the positive-edge subgraph of action nodes,
/// invoking `fn` once per elementary cycle (node sequence with first == last,
/// least node first). Self-loops come first as length-1 cycles.
void enumerate_elementary_cycles(const ActionGraph& g, const Alphabet& alphabet,
                                 const std::function<void(const std::vector<int>&)>& fn);

/// All elementary cycles among action nodes ranked by strength descending;
/// `total_found` receives the full enumeration count.
std::vector<CycleFeature> strongest_cycles(const ActionGraph& g, const Alphabet& alphabet,
                                           int top_m = 10, std::int64_t* total_found = nullptr);

/// Consecutive n-token windows over sentinel-padded sessions, normalized by
/// the user's total window count. Keys are node-index sequences.
std::map<std::vector<int>, double> ngram_paths(const std::vector<Session>& sessions,
                                               const Alphabet& alphabet, int n);

/// "A → B → C" rendering used by the ranking dumps.
std::string gram_to_string(const std::vector<int>& nodes, const Alphabet& alphabet);

struct FeatureConfig {
  bool include_macro = true;
  bool include_graph = true;
  bool include_ngrams = false;
  std::vector<int> khop_ks{1, 2, 3};
  int path_top_m = 10;
  int cycle_top_m = 10;
  int e2e_cap = 6;
  std::vector<int> ngram_ns{2, 3};
  int ngram_top_m = 10;
};

struct FeatureSchema {
  std::vector<std::string> names;
  static FeatureSchema build(const FeatureConfig& config, const Alphabet& alphabet);
  int size() const { return static_cast<int>(names.size()); }
};

/// Deterministic concatenation following FeatureSchema::build. Slots with no
/// value (fewer ranked paths/cycles than m) are imputed 0; the macro group
/// carries the profile-missingness indicator.
std::vector<double> assemble_features(const UserActivity& user, const ActionGraph& static_graph,
                                      const FeatureConfig& config, const Alphabet& alphabet);

/// Corpus-level n-gram vocabulary (top_m grams by mean per-user normalized
/// frequency) and the per-user frequency matrix over it. Used for the
/// common-paths clustering level and the ranking dumps.
struct NgramVocabulary {
  std::vector<std::vector<int>> grams;       // ranked
  std::vector<double> mean_frequency;        // aligned with grams
};
NgramVocabulary ngram_vocabulary(const std::vector<std::map<std::vector<int>, double>>& per_user,
                                 int top_m);
std::vector<double> ngram_user_vector(const std::map<std::vector<int>, double>& user_freqs,
                                      const NgramVocabulary& vocab);

}  // namespace ag
