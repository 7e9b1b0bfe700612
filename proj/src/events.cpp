#include "actiongraph/events.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <set>

#include <json.hpp>

#include "actiongraph/errors.hpp"

namespace ag {

namespace {
constexpr std::int64_t kMsPerDay = 86400000;

std::int64_t utc_day(std::int64_t ts_ms) {
  // Events use non-negative epoch timestamps; plain division is fine.
  return ts_ms / kMsPerDay;
}
}  // namespace

std::map<std::string, std::vector<ActionEvent>> parse_events(std::istream& in,
                                                             const Alphabet& alphabet,
                                                             const ParseOptions& opts,
                                                             ParseStats* stats) {
  std::map<std::string, std::vector<ActionEvent>> out;
  std::string line;
  std::size_t line_no = 0;
  ParseStats local;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++local.lines;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("line " + std::to_string(line_no) + ": not a JSON object");
    }
    if (!j.contains("user_id") || !j["user_id"].is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": missing user_id");
    }
    if (!j.contains("ts") || !j["ts"].is_number_integer()) {
      throw DataError("line " + std::to_string(line_no) + ": missing ts");
    }
    if (!j.contains("action") || !j["action"].is_string()) {
      throw DataError("line " + std::to_string(line_no) + ": missing action");
    }
    const std::int64_t ts = j["ts"].get<std::int64_t>();
    if (ts < 0) throw DataError("line " + std::to_string(line_no) + ": negative ts");
    const std::string action = j["action"].get<std::string>();

    ActionEvent ev;
    ev.ts_ms = ts;
    if (action == kAppOpenName) {
      ev.kind = EventKind::kAppOpen;
    } else if (action == kAppCloseName) {
      ev.kind = EventKind::kAppClose;
    } else {
      const int idx = alphabet.action_index(action);
      if (idx < 0) {
        if (opts.allow_unknown) {
          ++local.dropped_unknown;
          continue;
        }
        throw DataError("line " + std::to_string(line_no) + ": unknown action '" + action + "'");
      }
      ev.kind = EventKind::kAction;
      ev.action = idx;
    }
    out[j["user_id"].get<std::string>()].push_back(ev);
    ++local.events;
  }
  for (auto& [user, events] : out) {
    std::stable_sort(events.begin(), events.end(),
                     [](const ActionEvent& a, const ActionEvent& b) { return a.ts_ms < b.ts_ms; });
  }
  if (stats) *stats = local;
  return out;
}

std::vector<Session> sessionize(const std::vector<ActionEvent>& events, double idle_threshold_s,
                                SessionizeStats* stats) {
  if (idle_threshold_s <= 0) throw UsageError("idle threshold must be positive");
  std::vector<Session> sessions;
  if (events.empty()) {
    if (stats) stats->invalid_sessions = 0;
    return sessions;
  }
  const double threshold_ms = idle_threshold_s * 1000.0;
  const std::int64_t day0 = utc_day(events.front().ts_ms);

  Session cur;
  std::int64_t prev_action_ts = 0;
  bool saw_close = false;        // APP_CLOSE since the last action
  bool close_open_pair = false;  // ...followed by APP_OPEN
  bool open_pending = false;     // open/close span with no action yet
  SessionizeStats local;

  auto flush = [&]() {
    if (!cur.actions.empty()) {
      cur.day = static_cast<int>(utc_day(cur.start_ts) - day0);
      sessions.push_back(std::move(cur));
    }
    cur = Session{};
  };

  for (const ActionEvent& ev : events) {
    switch (ev.kind) {
      case EventKind::kAppClose:
        if (open_pending) {
          ++local.invalid_sessions;
          open_pending = false;
        }
        saw_close = true;
        break;
      case EventKind::kAppOpen:
        if (saw_close) close_open_pair = true;
        open_pending = true;
        break;
      case EventKind::kAction: {
        if (!cur.actions.empty()) {
          const double gap = static_cast<double>(ev.ts_ms - prev_action_ts);
          if (gap > threshold_ms || close_open_pair) flush();
        }
        if (cur.actions.empty()) cur.start_ts = ev.ts_ms;
        cur.actions.push_back(ev.action);
        cur.end_ts = ev.ts_ms;
        prev_action_ts = ev.ts_ms;
        saw_close = false;
        close_open_pair = false;
        open_pending = false;
        break;
      }
    }
  }
  flush();
  if (stats) *stats = local;
  return sessions;
}

std::optional<double> median_idle_seconds(const std::vector<Session>& sessions) {
  if (sessions.size() < 2) return std::nullopt;
  std::vector<double> gaps;
  gaps.reserve(sessions.size() - 1);
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    gaps.push_back(static_cast<double>(sessions[i].start_ts - sessions[i - 1].end_ts) / 1000.0);
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  if (n % 2 == 1) return gaps[n / 2];
  return 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]);
}

int active_days(const std::vector<Session>& sessions, int day_from, int day_to) {
  if (day_from < 0 || day_from >= day_to) throw UsageError("invalid day range");
  std::set<int> days;
  for (const Session& s : sessions) {
    if (s.day >= day_from && s.day < day_to && !s.actions.empty()) days.insert(s.day);
  }
  return static_cast<int>(days.size());
}

MacroProfile make_macro_profile(const std::vector<Session>& observation_sessions,
                                int observation_days, const ProfileRecord* profile) {
  MacroProfile m;
  m.sessions_per_day =
      observation_days > 0
          ? static_cast<double>(observation_sessions.size()) / observation_days
          : 0.0;
  if (!observation_sessions.empty()) {
    double total = 0.0;
    for (const Session& s : observation_sessions) {
      total += static_cast<double>(s.end_ts - s.start_ts) / 1000.0;
    }
    m.avg_session_seconds = total / static_cast<double>(observation_sessions.size());
  }
  if (profile) {
    m.profile_missing = false;
    m.gender = profile->gender < 0 ? 0.5 : static_cast<double>(profile->gender);
    m.max_age = profile->max_age;
    m.friend_count = profile->friend_count;
  }
  return m;
}

bool eligible(const std::vector<Session>& observation_sessions, int min_sessions) {
  return static_cast<int>(observation_sessions.size()) >= min_sessions;
}

std::map<std::string, ProfileRecord> read_profiles_csv(std::istream& in) {
  std::map<std::string, ProfileRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("user_id,", 0) == 0) continue;  // header
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() != 4) {
      throw DataError("profiles line " + std::to_string(line_no) + ": expected 4 columns");
    }
    ProfileRecord r;
    try {
      r.gender = cells[1].empty() ? -1 : std::stoi(cells[1]);
      r.max_age = cells[2].empty() ? 0 : std::stoi(cells[2]);
      r.friend_count = cells[3].empty() ? 0 : std::stoi(cells[3]);
    } catch (const std::exception&) {
      throw DataError("profiles line " + std::to_string(line_no) + ": bad number");
    }
    if (r.gender > 1) r.gender = -1;
    out[cells[0]] = r;
  }
  return out;
}

}  // namespace ag
