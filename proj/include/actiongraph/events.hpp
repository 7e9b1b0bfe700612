#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actiongraph/alphabet.hpp"

namespace ag {

enum class EventKind { kAction, kAppOpen, kAppClose };

struct ActionEvent {
  std::int64_t ts_ms = 0;
  EventKind kind = EventKind::kAction;
  int action = -1;  // alphabet index; -1 for boundary signals
};

struct Session {
  std::int64_t start_ts = 0;
  std::int64_t end_ts = 0;
  int day = 0;  // UTC day offset from the user's first event
  std::vector<int> actions;
};

struct ProfileRecord {
  int gender = -1;  // 0/1, -1 unknown
  int max_age = 0;
  int friend_count = 0;
};

struct MacroProfile {
  double sessions_per_day = 0.0;
  double avg_session_seconds = 0.0;
  double gender = 0.5;  // 0/1, 0.5 when unknown
  double max_age = 0.0;
  double friend_count = 0.0;
  bool profile_missing = true;
};

struct UserActivity {
  std::string user_id;
  std::vector<Session> sessions;  // sorted by start_ts; observation window only
  int observation_days = 14;
  int horizon_days = 14;
  MacroProfile macro;
};

struct ParseOptions {
  bool allow_unknown = false;
};

struct ParseStats {
  std::size_t lines = 0;
  std::size_t events = 0;
  std::size_t dropped_unknown = 0;
};

struct SessionizeStats {
  std::size_t invalid_sessions = 0;  // open/close spans with no action inside
};

/// Parses JSON-lines event records {"user_id", "ts", "action"} and groups them
/// per user, sorted by timestamp (stable for ties). Malformed records raise
/// DataError naming the line; unknown action names raise DataError unless
/// opts.allow_unknown, in which case they are dropped and counted.
std::map<std::string, std::vector<ActionEvent>> parse_events(std::istream& in,
                                                             const Alphabet& alphabet,
                                                             const ParseOptions& opts = {},
                                                             ParseStats* stats = nullptr);

/// Splits one user's sorted events into valid sessions. A new session starts at
/// the first action after an APP_CLOSE -> APP_OPEN pair or after an
/// inter-action gap strictly greater than the idle threshold. Boundary signals
/// never appear inside sessions; spans with no action are dropped.
std::vector<Session> sessionize(const std::vector<ActionEvent>& events,
                                double idle_threshold_s = 25.0,
                                SessionizeStats* stats = nullptr);

/// Median inter-session gap in seconds; nullopt with fewer than two sessions.
std::optional<double> median_idle_seconds(const std::vector<Session>& sessions);

/// Distinct days in [day_from, day_to) holding at least one valid session.
int active_days(const std::vector<Session>& sessions, int day_from, int day_to);

MacroProfile make_macro_profile(const std::vector<Session>& observation_sessions,
                                int observation_days, const ProfileRecord* profile);

/// Eligibility rule: at least `min_sessions` valid sessions in the observation
/// window.
bool eligible(const std::vector<Session>& observation_sessions, int min_sessions = 5);

std::map<std::string, ProfileRecord> read_profiles_csv(std::istream& in);

}  // namespace ag
