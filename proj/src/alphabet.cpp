#include "actiongraph/alphabet.hpp"

#include <algorithm>

#include "actiongraph/errors.hpp"

namespace ag {

Alphabet::Alphabet(std::vector<std::string> actions) : actions_(std::move(actions)) {
  if (actions_.empty()) throw UsageError("alphabet must contain at least one action");
  std::sort(actions_.begin(), actions_.end());
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const std::string& a = actions_[i];
    if (a.empty()) throw UsageError("alphabet contains an empty action name");
    if (a == kSessionStartName || a == kSessionEndName || a == kAppOpenName ||
        a == kAppCloseName) {
      throw UsageError("alphabet may not contain reserved name: " + a);
    }
    if (i > 0 && actions_[i - 1] == a) throw UsageError("alphabet contains duplicate action: " + a);
    index_[a] = static_cast<int>(i);
  }
}

const Alphabet& Alphabet::defaults() {
  static const Alphabet a({"CHAT_VIEW", "CHAT_SEND", "SNAP_VIEW", "SNAP_CREATE", "SNAP_SEND",
                           "SNAP_SAVE", "STORY_VIEW", "STORY_SEND", "DISCOVER_VIEW", "OTHER"});
  return a;
}

int Alphabet::action_index(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

const std::string& Alphabet::node_name(int node) const {
  if (node == start_node()) return start_name_;
  if (node == end_node()) return end_name_;
  return actions_[static_cast<std::size_t>(action_of_node(node))];
}

}  // namespace ag
