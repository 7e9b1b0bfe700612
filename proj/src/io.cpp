#include "actiongraph/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

std::string format_double(double v) {
  nlohmann::json j = v;  // shortest round-trip form
  return j.dump();
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

const char* event_action_name(const ActionEvent& ev, const Alphabet& alphabet) {
  switch (ev.kind) {
    case EventKind::kAppOpen: return kAppOpenName;
    case EventKind::kAppClose: return kAppCloseName;
    case EventKind::kAction: return alphabet.action_name(ev.action).c_str();
  }
  return "?";
}

}  // namespace

void write_events_jsonl(std::ostream& out,
                        const std::vector<std::pair<std::string, ActionEvent>>& events,
                        const Alphabet& alphabet) {
  for (const auto& [user, ev] : events) {
    out << "{\"user_id\":\"" << user << "\",\"ts\":" << ev.ts_ms << ",\"action\":\""
        << event_action_name(ev, alphabet) << "\"}\n";
  }
}

void write_profiles_csv(std::ostream& out, const std::map<std::string, ProfileRecord>& profiles) {
  out << "user_id,gender,max_age,friend_count\n";
  for (const auto& [user, p] : profiles) {
    out << user << ',';
    if (p.gender >= 0) out << p.gender;
    out << ',' << p.max_age << ',' << p.friend_count << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<SimUserTruth>& truth) {
  out << "user_id,future_active_days,archetype,lambda,blend_mid,slope,link_z,p_future\n";
  for (const auto& t : truth) {
    out << t.user_id << ',' << t.future_active_days << ',' << t.archetype << ','
        << format_double(t.lambda) << ',' << format_double(t.blend_mid) << ','
        << format_double(t.slope) << ',' << format_double(t.link_z) << ','
        << format_double(t.p_future) << '\n';
  }
}

void write_sessions_jsonl(std::ostream& out, const std::string& user_id,
                          const std::vector<Session>& sessions, const Alphabet& alphabet) {
  for (const Session& s : sessions) {
    out << "{\"user_id\":\"" << user_id << "\",\"start_ts\":" << s.start_ts
        << ",\"end_ts\":" << s.end_ts << ",\"day\":" << s.day << ",\"actions\":[";
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      if (i > 0) out << ',';
      out << '"' << alphabet.action_name(s.actions[i]) << '"';
    }
    out << "]}\n";
  }
}

std::map<std::string, std::vector<Session>> read_sessions_jsonl(std::istream& in,
                                                                const Alphabet& alphabet) {
  std::map<std::string, std::vector<Session>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("user_id") || !j.contains("start_ts") ||
        !j.contains("end_ts") || !j.contains("day") || !j.contains("actions")) {
      throw DataError("sessions line " + std::to_string(line_no) + ": malformed record");
    }
    Session s;
    s.start_ts = j["start_ts"].get<std::int64_t>();
    s.end_ts = j["end_ts"].get<std::int64_t>();
    s.day = j["day"].get<int>();
    for (const auto& a : j["actions"]) {
      const int idx = alphabet.action_index(a.get<std::string>());
      if (idx < 0) {
        throw DataError("sessions line " + std::to_string(line_no) + ": unknown action '" +
                        a.get<std::string>() + "'");
      }
      s.actions.push_back(idx);
    }
    if (s.actions.empty()) {
      throw DataError("sessions line " + std::to_string(line_no) + ": empty session");
    }
    out[j["user_id"].get<std::string>()].push_back(std::move(s));
  }
  return out;
}

void write_graph_csv_header(std::ostream& out, bool temporal) {
  out << (temporal ? "user_id,day,src,dst,prob,count\n" : "user_id,src,dst,prob,count\n");
}

void write_graph_csv_rows(std::ostream& out, const std::string& user_id, const ActionGraph& g,
                          const Alphabet& alphabet, int day) {
  for (int u = 0; u < g.n; ++u) {
    for (int v = 0; v < g.n; ++v) {
      if (g.c(u, v) == 0) continue;
      out << user_id << ',';
      if (day >= 0) out << day << ',';
      out << alphabet.node_name(u) << ',' << alphabet.node_name(v) << ','
          << format_double(g.p(u, v)) << ',' << g.c(u, v) << '\n';
    }
  }
}

void write_user_matrix_csv(std::ostream& out, const std::vector<std::string>& columns,
                           const std::vector<std::string>& user_ids,
                           const std::vector<std::vector<double>>& rows) {
  out << "user_id";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < user_ids.size(); ++i) {
    out << user_ids[i];
    for (double v : rows[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

UserMatrix read_user_matrix_csv(std::istream& in) {
  UserMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (line_no == 1) {
      if (cells.empty() || cells[0] != "user_id") {
        throw DataError("user matrix: first column must be user_id");
      }
      m.columns.assign(cells.begin() + 1, cells.end());
      continue;
    }
    if (cells.size() != m.columns.size() + 1) {
      throw DataError("user matrix line " + std::to_string(line_no) + ": column count mismatch");
    }
    m.user_ids.push_back(cells[0]);
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        row.push_back(std::stod(cells[i]));
      } catch (const std::exception&) {
        throw DataError("user matrix line " + std::to_string(line_no) + ": bad number '" +
                        cells[i] + "'");
      }
    }
    m.rows.push_back(std::move(row));
  }
  if (m.columns.empty()) throw DataError("user matrix: missing header");
  return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json j;
  j["tool"] = "actiongraph";
  j["version"] = kToolVersion;
  j["subcommand"] = m.subcommand;
  j["options"] = m.options;
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [name, hash] : m.inputs) {
    inputs.push_back({{"file", name}, {"fnv1a64", hash}});
  }
  j["inputs"] = inputs;
  j["outputs"] = m.outputs;
  write_text_file(path, j.dump(2) + "\n");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output: " + path);
  out << content;
  if (!out) throw DataError("failed writing: " + path);
}

}  // namespace ag
