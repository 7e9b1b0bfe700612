#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace ag::pipeline {

/// String key/value stage options with typed access. Keys are validated
/// against the registry in pipeline.cpp; set() rejects unknown keys.
class Options {
 public:
  void set(const std::string& key, const std::string& value);  // UsageError on unknown key
  bool has(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  long geti(const std::string& key, long fallback) const;
  double getd(const std::string& key, double fallback) const;
  bool getb(const std::string& key, bool fallback) const;
  std::uint64_t seed() const { return static_cast<std::uint64_t>(geti("seed", 0)); }
  int jobs() const { return static_cast<int>(geti("jobs", 1)); }
  const std::map<std::string, std::string>& raw() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// Stage drivers; return a status code (ag_status values) and fill `error`
// on failure. All artifact output is deterministic for fixed options.
int run_simulate(const Options& opts, const std::string& out_dir, std::string* error);
int run_sessionize(const Options& opts, const std::string& events_path,
                   const std::string& out_path, std::string* error);
int run_graph(const Options& opts, const std::string& sessions_path, const std::string& out_dir,
              std::string* error);
int run_features(const Options& opts, const std::string& sessions_path,
                 const std::string& out_dir, std::string* error);
int run_genes(const Options& opts, const std::string& sessions_path, const std::string& out_dir,
              std::string* error);
int run_cluster(const Options& opts, const std::string& matrix_csv, const std::string& out_dir,
                std::string* error);
int run_train(const Options& opts, const std::string& events_path, const std::string& out_dir,
              std::string* error);
int run_eval(const Options& opts, const std::string& checkpoint_path,
             const std::string& events_path, const std::string& out_dir, std::string* error);
int run_report(const Options& opts, const std::string& events_path, const std::string& out_dir,
               std::string* error);

}  // namespace ag::pipeline
