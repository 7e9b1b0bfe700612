#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "actiongraph/events.hpp"
#include "actiongraph/graph.hpp"
#include "actiongraph/simulate.hpp"

namespace ag {

/// Round-trippable decimal rendering (%.17g trimmed via shortest form).
std::string format_double(double v);

std::uint64_t fnv1a64_file(const std::string& path);  // DataError if unreadable
std::string hex64(std::uint64_t v);

void write_events_jsonl(std::ostream& out,
                        const std::vector<std::pair<std::string, ActionEvent>>& events,
                        const Alphabet& alphabet);
void write_profiles_csv(std::ostream& out, const std::map<std::string, ProfileRecord>& profiles);
void write_truth_csv(std::ostream& out, const std::vector<SimUserTruth>& truth);

void write_sessions_jsonl(std::ostream& out, const std::string& user_id,
                          const std::vector<Session>& sessions, const Alphabet& alphabet);
std::map<std::string, std::vector<Session>> read_sessions_jsonl(std::istream& in,
                                                                const Alphabet& alphabet);

/// Static edge list: user_id,src,dst,prob,count. The temporal variant adds a
/// day column after user_id.
void write_graph_csv_header(std::ostream& out, bool temporal);
void write_graph_csv_rows(std::ostream& out, const std::string& user_id, const ActionGraph& g,
                          const Alphabet& alphabet, int day = -1);

/// Generic numeric table keyed by user_id (features, gene mixtures, metrics).
void write_user_matrix_csv(std::ostream& out, const std::vector<std::string>& columns,
                           const std::vector<std::string>& user_ids,
                           const std::vector<std::vector<double>>& rows);
struct UserMatrix {
  std::vector<std::string> columns;  // without the leading user_id
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> rows;
};
UserMatrix read_user_matrix_csv(std::istream& in);

/// Run manifest: config, seed, tool version, and content hashes of the
/// inputs. File names are recorded without directories so reruns into
/// different output roots stay byte-identical.
struct Manifest {
  std::string subcommand;
  std::map<std::string, std::string> options;  // includes the seed
  std::vector<std::pair<std::string, std::string>> inputs;  // (basename, fnv1a64 hex)
  std::vector<std::string> outputs;                         // basenames
};
void write_manifest(const std::string& path, const Manifest& m);

std::string read_text_file(const std::string& path);  // DataError if missing
void write_text_file(const std::string& path, const std::string& content);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ag
