#pragma once

#include <map>
#include <string>
#include <vector>

namespace ag {

inline constexpr const char* kSessionStartName = "SESSION_START";
inline constexpr const char* kSessionEndName = "SESSION_END";
inline constexpr const char* kAppOpenName = "APP_OPEN";
inline constexpr const char* kAppCloseName = "APP_CLOSE";

/// Configurable action alphabet with the canonical node layout used by every
/// graph in the pipeline: node 0 = SESSION_START, nodes 1..n = actions in
/// lexicographic order, node n+1 = SESSION_END. The default alphabet has 10
/// actions, giving the 12-node graphs everything downstream assumes.
class Alphabet {
 public:
  /// Sorts and validates the action names. Duplicates and reserved names
  /// (sentinels, APP_OPEN/APP_CLOSE) are rejected.
  explicit Alphabet(std::vector<std::string> actions);

  static const Alphabet& defaults();

  int action_count() const { return static_cast<int>(actions_.size()); }
  int node_count() const { return action_count() + 2; }
  int start_node() const { return 0; }
  int end_node() const { return node_count() - 1; }

  bool is_action_node(int node) const { return node > 0 && node < end_node(); }
  int node_of_action(int action) const { return action + 1; }
  int action_of_node(int node) const { return node - 1; }

  const std::string& action_name(int action) const { return actions_[action]; }
  /// -1 when the name is not part of the alphabet.
  int action_index(const std::string& name) const;
  const std::string& node_name(int node) const;
  const std::vector<std::string>& action_names() const { return actions_; }

 private:
  std::vector<std::string> actions_;
  std::map<std::string, int> index_;
  std::string start_name_{kSessionStartName};
  std::string end_name_{kSessionEndName};
};

}  // namespace ag
