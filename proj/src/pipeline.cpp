#include "actiongraph/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "actiongraph/cluster.hpp"
#include "actiongraph/dataset.hpp"
#include "actiongraph/errors.hpp"
#include "actiongraph/io.hpp"
#include "actiongraph/lda.hpp"
#include "actiongraph/simulate.hpp"
#include "actiongraph/train.hpp"

namespace ag::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_options() {
  static const std::set<std::string> keys = {
      // global
      "seed", "jobs",
      // events / dataset
      "idle_threshold_s", "allow_unknown", "profiles", "min_sessions", "observation_days",
      "horizon_days", "balance", "balance_cap",
      // simulate
      "users", "noise", "lambda_min", "lambda_max", "blend_min", "blend_max", "slope_range",
      "volume_drift_range", "link_intercept", "link_rate", "link_richness", "link_drift",
      "link_noise_sd", "archetype_weights", "profile_missing_prob",
      // features
      "ngrams", "path_top_m", "cycle_top_m", "e2e_cap", "ngram_top_m",
      // genes
      "topics", "alpha", "beta", "iters", "infer_iters",
      // cluster
      "k", "k_min", "k_max", "rates",
      // models / training
      "model", "task", "head", "feature_set", "epochs", "batch_size", "lr", "optimizer",
      "l2", "dropout", "early_stop", "patience", "val_fraction", "pool_active_nodes",
      // report
      "models", "tasks", "folds", "heads", "clusters",
  };
  return keys;
}

std::string basename_of(const std::string& path) { return fs::path(path).filename().string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw DataError("input not found: " + path);
}

Manifest base_manifest(const std::string& subcommand, const Options& opts) {
  Manifest m;
  m.subcommand = subcommand;
  m.options = opts.raw();
  if (!m.options.count("seed")) m.options["seed"] = "0";
  return m;
}

void add_input(Manifest& m, const std::string& path) {
  m.inputs.emplace_back(basename_of(path), hex64(fnv1a64_file(path)));
}

int guard(std::string* error, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const UsageError& e) {
    if (error) *error = e.what();
    return 1;
  } catch (const NumericError& e) {
    if (error) *error = e.what();
    return 3;
  } catch (const DataError& e) {
    if (error) *error = e.what();
    return 2;
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return 2;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset loading shared by train / eval / report
// ---------------------------------------------------------------------------

struct LoadedDataset {
  std::vector<UserData> users;        // balanced subset when requested
  DatasetConfig config;
  std::map<std::string, std::vector<Session>> sessions_by_user;
};

std::map<std::string, std::vector<Session>> sessionize_events_file(const Options& opts,
                                                                   const std::string& events_path,
                                                                   const Alphabet& alphabet,
                                                                   ParseStats* pstats = nullptr) {
  require_file(events_path);
  std::ifstream in(events_path);
  ParseOptions popts;
  popts.allow_unknown = opts.getb("allow_unknown", false);
  auto events = parse_events(in, alphabet, popts, pstats);
  const double threshold = opts.getd("idle_threshold_s", 25.0);
  std::map<std::string, std::vector<Session>> sessions;
  for (auto& [user, evs] : events) {
    auto s = sessionize(evs, threshold);
    if (!s.empty()) sessions[user] = std::move(s);
  }
  return sessions;
}

std::map<std::string, ProfileRecord> load_profiles(const Options& opts,
                                                   const std::string& events_path,
                                                   Manifest* manifest) {
  std::string path = opts.get("profiles", "");
  if (path.empty()) {
    // default: profiles.csv next to the events file
    const fs::path candidate = fs::path(events_path).parent_path() / "profiles.csv";
    if (fs::exists(candidate)) path = candidate.string();
  }
  if (path.empty()) return {};
  require_file(path);
  if (manifest) add_input(*manifest, path);
  std::ifstream in(path);
  return read_profiles_csv(in);
}

LoadedDataset load_dataset(const Options& opts, const std::string& events_path,
                           Manifest* manifest) {
  const Alphabet& alphabet = Alphabet::defaults();
  LoadedDataset ds;
  ds.config.observation_days = static_cast<int>(opts.geti("observation_days", 14));
  ds.config.horizon_days = static_cast<int>(opts.geti("horizon_days", 14));
  ds.config.min_sessions = static_cast<int>(opts.geti("min_sessions", 5));
  ds.config.features.include_ngrams = opts.getb("ngrams", false);

  if (manifest) add_input(*manifest, events_path);
  ds.sessions_by_user = sessionize_events_file(opts, events_path, alphabet);
  const auto profiles = load_profiles(opts, events_path, manifest);
  auto users = build_user_data(ds.sessions_by_user, profiles, ds.config, alphabet, opts.jobs());
  if (users.empty()) throw DataError("no eligible users in " + events_path);

  if (opts.getb("balance", true)) {
    const auto idx = balance_classes(users, splitmix64(opts.seed() ^ 0xba1a),
                                     static_cast<int>(opts.geti("balance_cap", -1)));
    std::vector<UserData> subset;
    subset.reserve(idx.size());
    for (int i : idx) subset.push_back(std::move(users[static_cast<std::size_t>(i)]));
    users = std::move(subset);
  }
  ds.users = std::move(users);
  return ds;
}

// ---------------------------------------------------------------------------
// Model spec parsing and checkpoints
// ---------------------------------------------------------------------------

struct NamedSpec {
  std::string cli_name;  // e.g. feature_softmax, multichannel
  ModelSpec spec;
};

FeatureConfig feature_set_config(const std::string& set) {
  FeatureConfig fc;
  if (set == "macro") {
    fc.include_macro = true;
    fc.include_graph = false;
  } else if (set == "graph") {
    fc.include_macro = false;
    fc.include_graph = true;
  } else if (set == "macro_graph" || set == "macro+graph") {
    fc.include_macro = true;
    fc.include_graph = true;
  } else {
    throw UsageError("unknown feature_set: " + set + " (macro|graph|macro_graph)");
  }
  return fc;
}

NamedSpec parse_model_spec(const Options& opts) {
  NamedSpec ns;
  ns.cli_name = opts.get("model", "multichannel");
  ModelSpec& spec = ns.spec;
  spec.task = task_from_string(opts.get("task", "trend"));

  const std::string& name = ns.cli_name;
  if (name == "feature_softmax") {
    spec.kind = ModelKind::kFeature;
    spec.head = HeadKind::kSoftmax;
  } else if (name == "feature_svm") {
    spec.kind = ModelKind::kFeature;
    spec.head = HeadKind::kHinge;
  } else if (name == "feature_ridge") {
    spec.kind = ModelKind::kFeature;
    spec.head = HeadKind::kLinearMse;
  } else {
    spec.kind = model_kind_from_string(name);
    spec.head = spec.task == Task::kActive
                    ? HeadKind::kLinearMse
                    : head_from_string(opts.get("head", "softmax"));
  }
  if (spec.kind == ModelKind::kFeature && spec.task == Task::kActive &&
      name != "feature_ridge") {
    throw UsageError(name + " is a classifier; use feature_ridge for the active task");
  }
  spec.features = feature_set_config(opts.get("feature_set", "macro_graph"));
  spec.hyper.dropout = opts.getd("dropout", 0.5);
  spec.hyper.pool_active_nodes = opts.getb("pool_active_nodes", false);
  spec.init_seed = splitmix64(opts.seed() ^ 0x1817);
  return ns;
}

TrainConfig parse_train_config(const Options& opts) {
  TrainConfig tc;
  tc.epochs = static_cast<int>(opts.geti("epochs", 30));
  tc.batch_size = static_cast<int>(opts.geti("batch_size", 32));
  tc.opt.lr = opts.getd("lr", 1e-3);
  tc.opt.l2_head = opts.getd("l2", 1e-3);
  const std::string optimizer = opts.get("optimizer", "adam");
  if (optimizer == "adam") {
    tc.opt.kind = OptimizerConfig::Kind::kAdam;
  } else if (optimizer == "sgd") {
    tc.opt.kind = OptimizerConfig::Kind::kSgd;
  } else {
    throw UsageError("unknown optimizer: " + optimizer);
  }
  tc.early_stop = opts.getb("early_stop", true);
  tc.patience = static_cast<int>(opts.geti("patience", 5));
  tc.val_fraction = opts.getd("val_fraction", 0.1);
  tc.seed = splitmix64(opts.seed() ^ 0x7a19);
  return tc;
}

json scaler_to_json(const RobustScaler& s) {
  return json{{"center", s.center}, {"scale", s.scale}};
}

RobustScaler scaler_from_json(const json& j) {
  RobustScaler s;
  s.center = j.at("center").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  return s;
}

json feature_config_to_json(const FeatureConfig& fc) {
  return json{{"include_macro", fc.include_macro},   {"include_graph", fc.include_graph},
              {"include_ngrams", fc.include_ngrams}, {"khop_ks", fc.khop_ks},
              {"path_top_m", fc.path_top_m},         {"cycle_top_m", fc.cycle_top_m},
              {"e2e_cap", fc.e2e_cap},               {"ngram_ns", fc.ngram_ns},
              {"ngram_top_m", fc.ngram_top_m}};
}

FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig fc;
  fc.include_macro = j.at("include_macro").get<bool>();
  fc.include_graph = j.at("include_graph").get<bool>();
  fc.include_ngrams = j.at("include_ngrams").get<bool>();
  fc.khop_ks = j.at("khop_ks").get<std::vector<int>>();
  fc.path_top_m = j.at("path_top_m").get<int>();
  fc.cycle_top_m = j.at("cycle_top_m").get<int>();
  fc.e2e_cap = j.at("e2e_cap").get<int>();
  fc.ngram_ns = j.at("ngram_ns").get<std::vector<int>>();
  fc.ngram_top_m = j.at("ngram_top_m").get<int>();
  return fc;
}

// Versioned checkpoint: model spec, dims, train-fitted scalers, and named
// parameter arrays with shape headers.
constexpr int kCheckpointVersion = 1;

json checkpoint_to_json(const ModelSpec& spec, const ModelDims& dims, const FoldInputs& fold,
                        const DatasetConfig& dcfg, ForecastModel& model) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["tool_version"] = kToolVersion;
  j["model"] = {{"kind", to_string(spec.kind)},
                {"task", to_string(spec.task)},
                {"head", to_string(spec.head)},
                {"init_seed", spec.init_seed},
                {"hyper",
                 {{"lstm_hidden", spec.hyper.lstm_hidden},
                  {"gcn_hidden", spec.hyper.gcn_hidden},
                  {"lstm_layers", spec.hyper.lstm_layers},
                  {"dropout", spec.hyper.dropout},
                  {"pool_active_nodes", spec.hyper.pool_active_nodes}}},
                {"features", feature_config_to_json(spec.features)}};
  j["dims"] = {{"n_nodes", dims.n_nodes},
               {"n_actions", dims.n_actions},
               {"obs_days", dims.obs_days},
               {"feature_dim", dims.feature_dim},
               {"macro_dim", dims.macro_dim}};
  j["dataset"] = {{"observation_days", dcfg.observation_days},
                  {"horizon_days", dcfg.horizon_days},
                  {"min_sessions", dcfg.min_sessions}};
  j["scalers"] = {{"features", scaler_to_json(fold.feature_scaler)},
                  {"macro", scaler_to_json(fold.macro_scaler)},
                  {"activity", scaler_to_json(fold.activity_scaler)}};
  json params = json::object();
  for (const Param* p : model.params()) {
    params[p->name] = {{"rows", p->value.rows}, {"cols", p->value.cols}, {"data", p->value.d}};
  }
  j["params"] = params;
  return j;
}

struct LoadedCheckpoint {
  ModelSpec spec;
  ModelDims dims;
  DatasetConfig dcfg;
  RobustScaler feature_scaler, macro_scaler, activity_scaler;
  std::unique_ptr<ForecastModel> model;
};

LoadedCheckpoint checkpoint_from_json(const json& j) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion) {
    throw DataError("unsupported checkpoint format");
  }
  LoadedCheckpoint cp;
  const json& jm = j.at("model");
  cp.spec.kind = model_kind_from_string(jm.at("kind").get<std::string>());
  cp.spec.task = task_from_string(jm.at("task").get<std::string>());
  cp.spec.head = head_from_string(jm.at("head").get<std::string>());
  cp.spec.init_seed = jm.at("init_seed").get<std::uint64_t>();
  const json& jh = jm.at("hyper");
  cp.spec.hyper.lstm_hidden = jh.at("lstm_hidden").get<int>();
  cp.spec.hyper.gcn_hidden = jh.at("gcn_hidden").get<int>();
  cp.spec.hyper.lstm_layers = jh.at("lstm_layers").get<int>();
  cp.spec.hyper.dropout = jh.at("dropout").get<double>();
  cp.spec.hyper.pool_active_nodes = jh.at("pool_active_nodes").get<bool>();
  cp.spec.features = feature_config_from_json(jm.at("features"));
  const json& jd = j.at("dims");
  cp.dims.n_nodes = jd.at("n_nodes").get<int>();
  cp.dims.n_actions = jd.at("n_actions").get<int>();
  cp.dims.obs_days = jd.at("obs_days").get<int>();
  cp.dims.feature_dim = jd.at("feature_dim").get<int>();
  cp.dims.macro_dim = jd.at("macro_dim").get<int>();
  const json& jc = j.at("dataset");
  cp.dcfg.observation_days = jc.at("observation_days").get<int>();
  cp.dcfg.horizon_days = jc.at("horizon_days").get<int>();
  cp.dcfg.min_sessions = jc.at("min_sessions").get<int>();
  cp.dcfg.features = cp.spec.features;
  cp.feature_scaler = scaler_from_json(j.at("scalers").at("features"));
  cp.macro_scaler = scaler_from_json(j.at("scalers").at("macro"));
  cp.activity_scaler = scaler_from_json(j.at("scalers").at("activity"));

  cp.model = build_model(cp.spec, cp.dims);
  const json& jp = j.at("params");
  for (Param* p : cp.model->params()) {
    if (!jp.contains(p->name)) throw DataError("checkpoint missing parameter " + p->name);
    const json& pj = jp.at(p->name);
    if (pj.at("rows").get<int>() != p->value.rows || pj.at("cols").get<int>() != p->value.cols) {
      throw DataError("checkpoint shape mismatch for " + p->name);
    }
    p->value.d = pj.at("data").get<std::vector<double>>();
  }
  return cp;
}

void write_curve_csv(const std::string& path, const TrainResult& result) {
  std::ostringstream out;
  out << "epoch,train_loss,val_metric\n";
  for (const auto& p : result.curve) {
    out << p.epoch << ',' << format_double(p.train_loss) << ',';
    if (p.has_val) out << format_double(p.val_metric);
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

}  // namespace

void Options::set(const std::string& key, const std::string& value) {
  if (!known_options().count(key)) throw UsageError("unknown option: " + key);
  kv_[key] = value;
}

bool Options::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Options::get(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

long Options::geti(const std::string& key, long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (const std::exception&) {
    throw UsageError("option " + key + " expects an integer, got '" + it->second + "'");
  }
}

double Options::getd(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw UsageError("option " + key + " expects a number, got '" + it->second + "'");
  }
}

bool Options::getb(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError("option " + key + " expects a boolean, got '" + v + "'");
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

int run_simulate(const Options& opts, const std::string& out_dir, std::string* error) {
  return guard(error, [&]() {
    const Alphabet& alphabet = Alphabet::defaults();
    SimConfig cfg;
    cfg.n_users = static_cast<int>(opts.geti("users", 1000));
    cfg.observation_days = static_cast<int>(opts.geti("observation_days", 14));
    cfg.horizon_days = static_cast<int>(opts.geti("horizon_days", 14));
    cfg.seed = opts.seed();
    cfg.dirichlet_concentration = opts.getd("noise", cfg.dirichlet_concentration);
    cfg.lambda_min = opts.getd("lambda_min", cfg.lambda_min);
    cfg.lambda_max = opts.getd("lambda_max", cfg.lambda_max);
    cfg.blend_min = opts.getd("blend_min", cfg.blend_min);
    cfg.blend_max = opts.getd("blend_max", cfg.blend_max);
    cfg.slope_range = opts.getd("slope_range", cfg.slope_range);
    cfg.volume_drift_range = opts.getd("volume_drift_range", cfg.volume_drift_range);
    cfg.link_intercept = opts.getd("link_intercept", cfg.link_intercept);
    cfg.link_rate = opts.getd("link_rate", cfg.link_rate);
    cfg.link_richness = opts.getd("link_richness", cfg.link_richness);
    cfg.link_drift = opts.getd("link_drift", cfg.link_drift);
    cfg.link_noise_sd = opts.getd("link_noise_sd", cfg.link_noise_sd);
    cfg.profile_missing_prob = opts.getd("profile_missing_prob", cfg.profile_missing_prob);
    if (opts.has("archetype_weights")) {
      cfg.archetype_weights.clear();
      for (const auto& w : split_list(opts.get("archetype_weights", ""))) {
        cfg.archetype_weights.push_back(std::stod(w));
      }
    }

    const SimCorpus corpus = gen_corpus(cfg, alphabet, opts.jobs());
    ensure_dir(out_dir);
    {
      std::ofstream out(fs::path(out_dir) / "events.jsonl");
      write_events_jsonl(out, corpus.events, alphabet);
    }
    {
      std::ofstream out(fs::path(out_dir) / "profiles.csv");
      write_profiles_csv(out, corpus.profiles);
    }
    {
      std::ofstream out(fs::path(out_dir) / "ground_truth.csv");
      write_truth_csv(out, corpus.truth);
    }
    Manifest m = base_manifest("simulate", opts);
    m.outputs = {"events.jsonl", "profiles.csv", "ground_truth.csv"};
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "simulate: " << corpus.truth.size() << " users, " << corpus.events.size()
              << " events -> " << out_dir << "\n";
  });
}

int run_sessionize(const Options& opts, const std::string& events_path,
                   const std::string& out_path, std::string* error) {
  return guard(error, [&]() {
    const Alphabet& alphabet = Alphabet::defaults();
    require_file(events_path);
    Manifest m = base_manifest("sessionize", opts);
    add_input(m, events_path);

    std::ifstream in(events_path);
    ParseOptions popts;
    popts.allow_unknown = opts.getb("allow_unknown", false);
    ParseStats pstats;
    auto events = parse_events(in, alphabet, popts, &pstats);

    const double threshold = opts.getd("idle_threshold_s", 25.0);
    std::size_t session_count = 0, invalid = 0;
    const fs::path out_file(out_path);
    if (out_file.has_parent_path()) ensure_dir(out_file.parent_path().string());
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot open output: " + out_path);
    for (const auto& [user, evs] : events) {
      SessionizeStats st;
      const auto sessions = sessionize(evs, threshold, &st);
      invalid += st.invalid_sessions;
      session_count += sessions.size();
      write_sessions_jsonl(out, user, sessions, alphabet);
    }
    m.outputs = {basename_of(out_path)};
    write_manifest(out_path + ".manifest.json", m);
    std::cout << "sessionize: " << pstats.events << " events -> " << session_count
              << " sessions (" << invalid << " empty spans dropped";
    if (pstats.dropped_unknown > 0) std::cout << ", " << pstats.dropped_unknown << " unknown actions dropped";
    std::cout << ")\n";
  });
}

int run_graph(const Options& opts, const std::string& sessions_path, const std::string& out_dir,
              std::string* error) {
  return guard(error, [&]() {
    const Alphabet& alphabet = Alphabet::defaults();
    require_file(sessions_path);
    Manifest m = base_manifest("graph", opts);
    add_input(m, sessions_path);

    std::ifstream in(sessions_path);
    const auto sessions = read_sessions_jsonl(in, alphabet);
    const int obs_days = static_cast<int>(opts.geti("observation_days", 14));

    ensure_dir(out_dir);
    std::ofstream static_out(fs::path(out_dir) / "graph_static.csv");
    std::ofstream temporal_out(fs::path(out_dir) / "graph_temporal.csv");
    std::ofstream metrics_out(fs::path(out_dir) / "graph_metrics.csv");
    write_graph_csv_header(static_out, false);
    write_graph_csv_header(temporal_out, true);
    metrics_out << "user_id,graph_nodes,graph_edges,graph_density\n";

    for (const auto& [user, user_sessions] : sessions) {
      std::vector<Session> obs;
      for (const Session& s : user_sessions) {
        if (s.day >= 0 && s.day < obs_days) obs.push_back(s);
      }
      if (obs.empty()) continue;
      const ActionGraph g = build_static(obs, alphabet);
      write_graph_csv_rows(static_out, user, g, alphabet);
      const auto temporal = build_temporal(obs, alphabet, obs_days);
      for (int d = 0; d < obs_days; ++d) {
        write_graph_csv_rows(temporal_out, user, temporal[static_cast<std::size_t>(d)], alphabet, d);
      }
      const GraphMetrics gm = graph_metrics(g);
      metrics_out << user << ',' << gm.node_count << ',' << gm.edge_count << ','
                  << format_double(gm.density) << '\n';
    }
    m.outputs = {"graph_static.csv", "graph_temporal.csv", "graph_metrics.csv"};
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "graph: " << sessions.size() << " users -> " << out_dir << "\n";
  });
}

int run_features(const Options& opts, const std::string& sessions_path,
                 const std::string& out_dir, std::string* error) {
  return guard(error, [&]() {
    const Alphabet& alphabet = Alphabet::defaults();
    require_file(sessions_path);
    Manifest m = base_manifest("features", opts);
    add_input(m, sessions_path);

    std::ifstream in(sessions_path);
    const auto sessions = read_sessions_jsonl(in, alphabet);
    const auto profiles = load_profiles(opts, sessions_path, &m);

    DatasetConfig dcfg;
    dcfg.observation_days = static_cast<int>(opts.geti("observation_days", 14));
    dcfg.horizon_days = static_cast<int>(opts.geti("horizon_days", 14));
    dcfg.min_sessions = static_cast<int>(opts.geti("min_sessions", 5));
    dcfg.features.include_ngrams = opts.getb("ngrams", false);
    dcfg.features.path_top_m = static_cast<int>(opts.geti("path_top_m", 10));
    dcfg.features.cycle_top_m = static_cast<int>(opts.geti("cycle_top_m", 10));
    dcfg.features.e2e_cap = static_cast<int>(opts.geti("e2e_cap", 6));
    dcfg.features.ngram_top_m = static_cast<int>(opts.geti("ngram_top_m", 10));

    const auto users = build_user_data(sessions, profiles, dcfg, alphabet, opts.jobs());
    if (users.empty()) throw DataError("no eligible users in " + sessions_path);

    const FeatureSchema schema = FeatureSchema::build(dcfg.features, alphabet);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    for (const auto& u : users) {
      ids.push_back(u.user_id);
      rows.push_back(u.features_raw);
    }
    ensure_dir(out_dir);
    {
      std::ofstream out(fs::path(out_dir) / "features.csv");
      write_user_matrix_csv(out, schema.names, ids, rows);
    }

    // Corpus-level common-path rankings and the per-user n-gram matrix used
    // for the path-level clustering.
    const int vocab_m = std::max(20L, opts.geti("ngram_top_m", 20));
    std::vector<std::string> ngram_cols;
    std::vector<std::vector<double>> ngram_rows(users.size());
    for (int n : {2, 3}) {
      std::vector<std::map<std::vector<int>, double>> per_user;
      per_user.reserve(users.size());
      for (const auto& u : users) per_user.push_back(ngram_paths(u.activity.sessions, alphabet, n));
      const NgramVocabulary vocab = ngram_vocabulary(per_user, vocab_m);
      std::ostringstream rank;
      for (std::size_t i = 0; i < vocab.grams.size(); ++i) {
        rank << (i + 1) << '\t' << gram_to_string(vocab.grams[i], alphabet) << '\t'
             << format_double(vocab.mean_frequency[i]) << '\n';
      }
      const std::string fname = "rank_paths_" + std::to_string(n - 1) + "hop.txt";
      write_text_file((fs::path(out_dir) / fname).string(), rank.str());
      m.outputs.push_back(fname);
      for (std::size_t i = 0; i < vocab.grams.size(); ++i) {
        ngram_cols.push_back("ngram" + std::to_string(n) + "_" + std::to_string(i + 1));
      }
      for (std::size_t u = 0; u < users.size(); ++u) {
        const auto vec = ngram_user_vector(per_user[u], vocab);
        ngram_rows[u].insert(ngram_rows[u].end(), vec.begin(), vec.end());
      }
    }
    {
      std::ofstream out(fs::path(out_dir) / "ngram_features.csv");
      write_user_matrix_csv(out, ngram_cols, ids, ngram_rows);
    }

    m.outputs.insert(m.outputs.begin(), "features.csv");
    m.outputs.push_back("ngram_features.csv");
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "features: " << users.size() << " eligible users, " << schema.size()
              << " slots -> " << out_dir << "\n";
  });
}

int run_genes(const Options& opts, const std::string& sessions_path, const std::string& out_dir,
              std::string* error) {
  return guard(error, [&]() {
    const Alphabet& alphabet = Alphabet::defaults();
    require_file(sessions_path);
    Manifest m = base_manifest("genes", opts);
    add_input(m, sessions_path);

    std::ifstream in(sessions_path);
    const auto sessions = read_sessions_jsonl(in, alphabet);
    const int min_sessions = static_cast<int>(opts.geti("min_sessions", 5));
    const int obs_days = static_cast<int>(opts.geti("observation_days", 14));

    std::vector<std::string> ids;
    std::vector<std::vector<std::vector<int>>> user_docs;
    std::vector<std::vector<int>> corpus;
    for (const auto& [user, user_sessions] : sessions) {
      std::vector<std::vector<int>> docs;
      for (const Session& s : user_sessions) {
        if (s.day >= 0 && s.day < obs_days) docs.push_back(s.actions);
      }
      if (static_cast<int>(docs.size()) < min_sessions) continue;
      ids.push_back(user);
      corpus.insert(corpus.end(), docs.begin(), docs.end());
      user_docs.push_back(std::move(docs));
    }
    if (corpus.empty()) throw DataError("no eligible sessions in " + sessions_path);

    const int topics = static_cast<int>(opts.geti("topics", 5));
    const GeneModel model =
        lda_fit(corpus, alphabet.action_count(), topics, opts.getd("alpha", -1.0),
                opts.getd("beta", 0.01), static_cast<int>(opts.geti("iters", 500)),
                opts.seed());

    ensure_dir(out_dir);
    {
      std::ostringstream out;
      out << "topic";
      for (const auto& a : alphabet.action_names()) out << ',' << a;
      out << '\n';
      for (int k = 0; k < topics; ++k) {
        out << k;
        for (int w = 0; w < model.vocab; ++w) out << ',' << format_double(model.phi_at(k, w));
        out << '\n';
      }
      write_text_file((fs::path(out_dir) / "gene_model.csv").string(), out.str());
    }
    {
      const int infer_iters = static_cast<int>(opts.geti("infer_iters", 100));
      std::vector<std::string> cols;
      for (int k = 0; k < topics; ++k) cols.push_back("gene_" + std::to_string(k));
      std::vector<std::vector<double>> rows;
      for (std::size_t u = 0; u < ids.size(); ++u) {
        rows.push_back(user_gene_profile(user_docs[u], model, infer_iters,
                                         splitmix64(opts.seed() ^ fnv1a64(ids[u]))));
      }
      std::ofstream out(fs::path(out_dir) / "user_genes.csv");
      write_user_matrix_csv(out, cols, ids, rows);
    }
    m.outputs = {"gene_model.csv", "user_genes.csv"};
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "genes: " << corpus.size() << " sessions, " << ids.size() << " users, K="
              << topics << " -> " << out_dir << "\n";
  });
}

int run_cluster(const Options& opts, const std::string& matrix_csv, const std::string& out_dir,
                std::string* error) {
  return guard(error, [&]() {
    require_file(matrix_csv);
    Manifest m = base_manifest("cluster", opts);
    add_input(m, matrix_csv);

    std::ifstream in(matrix_csv);
    const UserMatrix um = read_user_matrix_csv(in);
    if (um.rows.empty()) throw DataError("no rows in " + matrix_csv);

    int k = static_cast<int>(opts.geti("k", 0));
    if (k == 0) {
      k = choose_k(um.rows, static_cast<int>(opts.geti("k_min", 2)),
                   static_cast<int>(opts.geti("k_max", 8)), opts.seed());
    }
    const ClusterModel model = kmeans_best(um.rows, k, opts.seed());
    const double sil = silhouette_score(um.rows, model.assignment);

    ensure_dir(out_dir);
    {
      std::ostringstream out;
      out << "user_id,cluster\n";
      for (std::size_t i = 0; i < um.user_ids.size(); ++i) {
        out << um.user_ids[i] << ',' << model.assignment[i] << '\n';
      }
      write_text_file((fs::path(out_dir) / "clusters.csv").string(), out.str());
    }
    {
      std::ostringstream out;
      out << "k,silhouette\n" << k << ',' << format_double(sil) << '\n';
      write_text_file((fs::path(out_dir) / "cluster_summary.csv").string(), out.str());
    }
    m.outputs = {"clusters.csv", "cluster_summary.csv"};

    const std::string rates_path = opts.get("rates", "");
    if (!rates_path.empty()) {
      require_file(rates_path);
      add_input(m, rates_path);
      std::ifstream rin(rates_path);
      const UserMatrix rm = read_user_matrix_csv(rin);
      std::map<std::string, double> by_user;
      for (std::size_t i = 0; i < rm.user_ids.size(); ++i) {
        by_user[rm.user_ids[i]] = rm.rows[i].empty() ? 0.0 : rm.rows[i][0];
      }
      std::vector<int> assignment;
      std::vector<double> rates;
      for (std::size_t i = 0; i < um.user_ids.size(); ++i) {
        auto it = by_user.find(um.user_ids[i]);
        if (it == by_user.end()) continue;
        assignment.push_back(model.assignment[i]);
        rates.push_back(it->second);
      }
      if (!assignment.empty()) {
        const auto profile = cluster_engagement_profile(assignment, rates);
        std::ostringstream out;
        out << "cluster,size,mean_rate,std_rate\n";
        for (const auto& row : profile) {
          out << row.cluster << ',' << row.size << ',' << format_double(row.mean_rate) << ','
              << format_double(row.std_rate) << '\n';
        }
        write_text_file((fs::path(out_dir) / "cluster_rates.csv").string(), out.str());
        m.outputs.push_back("cluster_rates.csv");
      }
    }
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "cluster: k=" << k << " silhouette=" << sil << " -> " << out_dir << "\n";
  });
}

int run_train(const Options& opts, const std::string& events_path, const std::string& out_dir,
              std::string* error) {
  return guard(error, [&]() {
    Manifest m = base_manifest("train", opts);
    LoadedDataset ds = load_dataset(opts, events_path, &m);
    NamedSpec ns = parse_model_spec(opts);
    ds.config.features = ns.spec.features;
    // Feature config may differ from the load-time default; rebuild raw
    // feature vectors when needed.
    {
      const Alphabet& alphabet = Alphabet::defaults();
      for (auto& u : ds.users) {
        u.features_raw = assemble_features(u.activity, u.static_graph, ns.spec.features, alphabet);
      }
    }
    const ModelDims dims = dims_from_users(ds.users);
    const auto idx = all_indices(ds.users.size());
    FoldInputs fold = make_fold_inputs(ds.users, idx);
    auto model = build_model(ns.spec, dims);
    const TrainConfig tc = parse_train_config(opts);
    const TrainResult result = train_model(*model, fold.samples, idx, tc);
    const double train_metric = evaluate_model(*model, fold.samples, idx, ds.config.horizon_days);

    ensure_dir(out_dir);
    const json cp = checkpoint_to_json(ns.spec, dims, fold, ds.config, *model);
    write_text_file((fs::path(out_dir) / "checkpoint.json").string(), cp.dump() + "\n");
    write_curve_csv((fs::path(out_dir) / "curve.csv").string(), result);
    m.outputs = {"checkpoint.json", "curve.csv"};
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "train: " << ns.cli_name << "/" << to_string(ns.spec.task) << " on "
              << ds.users.size() << " users, "
              << (ns.spec.task == Task::kTrend ? "train macro-F1=" : "train RMSE=")
              << train_metric << " -> " << out_dir << "\n";
  });
}

int run_eval(const Options& opts, const std::string& checkpoint_path,
             const std::string& events_path, const std::string& out_dir, std::string* error) {
  return guard(error, [&]() {
    require_file(checkpoint_path);
    Manifest m = base_manifest("eval", opts);
    add_input(m, checkpoint_path);

    const json cj = json::parse(read_text_file(checkpoint_path), nullptr, false);
    if (cj.is_discarded()) throw DataError("checkpoint is not valid JSON: " + checkpoint_path);
    LoadedCheckpoint cp = checkpoint_from_json(cj);

    Options load_opts = opts;
    load_opts.set("observation_days", std::to_string(cp.dcfg.observation_days));
    load_opts.set("horizon_days", std::to_string(cp.dcfg.horizon_days));
    load_opts.set("min_sessions", std::to_string(cp.dcfg.min_sessions));
    LoadedDataset ds = load_dataset(load_opts, events_path, &m);
    {
      const Alphabet& alphabet = Alphabet::defaults();
      for (auto& u : ds.users) {
        u.features_raw = assemble_features(u.activity, u.static_graph, cp.spec.features, alphabet);
      }
    }
    const FoldInputs fold =
        apply_scalers(ds.users, cp.feature_scaler, cp.macro_scaler, cp.activity_scaler);
    const auto idx = all_indices(ds.users.size());
    const double metric = evaluate_model(*cp.model, fold.samples, idx, cp.dcfg.horizon_days);

    ensure_dir(out_dir);
    std::ostringstream out;
    out << "metric,value\n";
    out << "n_users," << ds.users.size() << '\n';
    if (cp.spec.task == Task::kTrend) {
      out << "macro_f1," << format_double(metric) << '\n';
    } else {
      out << "rmse_days," << format_double(metric) << '\n';
      out << "rmse_rate," << format_double(metric / cp.dcfg.horizon_days) << '\n';
    }
    write_text_file((fs::path(out_dir) / "metrics.csv").string(), out.str());
    m.outputs = {"metrics.csv"};
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "eval: " << to_string(cp.spec.kind) << "/" << to_string(cp.spec.task) << " on "
              << ds.users.size() << " users -> " << metric << "\n";
  });
}

int run_report(const Options& opts, const std::string& events_path, const std::string& out_dir,
               std::string* error) {
  return guard(error, [&]() {
    Manifest m = base_manifest("report", opts);
    LoadedDataset ds = load_dataset(opts, events_path, &m);
    const Alphabet& alphabet = Alphabet::defaults();

    const auto tasks = split_list(opts.get("tasks", "trend,active"));
    const auto model_names = split_list(opts.get(
        "models", "macro,macro_graph,static_gcn,activity_lstm,temporal_gcn_lstm,multichannel"));
    const auto heads = split_list(opts.get("heads", "softmax"));

    CvConfig cv;
    cv.n_folds = static_cast<int>(opts.geti("folds", 10));
    cv.fold_seed = splitmix64(opts.seed() ^ 0xf01d5);
    cv.train = parse_train_config(opts);

    struct SummaryRow {
      std::string task, model, head;
      CvReport report;
    };
    std::vector<SummaryRow> rows;

    // Raw feature vectors per feature set, rebuilt lazily.
    std::string current_feature_set = "macro_graph";
    auto set_features = [&](const std::string& set) {
      if (set == current_feature_set) return;
      const FeatureConfig fc = feature_set_config(set);
      for (auto& u : ds.users) {
        u.features_raw = assemble_features(u.activity, u.static_graph, fc, alphabet);
      }
      current_feature_set = set;
    };

    for (const auto& task_name : tasks) {
      const Task task = task_from_string(task_name);
      for (const auto& model_name : model_names) {
        for (const auto& head_name : heads) {
          ModelSpec spec;
          spec.task = task;
          std::string feature_set;
          if (model_name == "macro") {
            spec.kind = ModelKind::kFeature;
            feature_set = "macro";
          } else if (model_name == "graph") {
            spec.kind = ModelKind::kFeature;
            feature_set = "graph";
          } else if (model_name == "macro_graph") {
            spec.kind = ModelKind::kFeature;
            feature_set = "macro_graph";
          } else {
            spec.kind = model_kind_from_string(model_name);
            feature_set = "macro_graph";
          }
          spec.head = task == Task::kActive ? HeadKind::kLinearMse : head_from_string(head_name);
          spec.features = feature_set_config(feature_set);
          spec.init_seed = splitmix64(opts.seed() ^ 0x1817);
          set_features(feature_set);

          const CvReport report = cross_validate(spec, ds.users, cv);
          rows.push_back({task_name, model_name, to_string(spec.head), report});
          if (task == Task::kActive) break;  // single head for regression
        }
      }
    }

    ensure_dir(out_dir);
    {
      std::ostringstream out;
      out << "task,model,head,fold,metric\n";
      for (const auto& r : rows) {
        for (std::size_t f = 0; f < r.report.fold_metrics.size(); ++f) {
          out << r.task << ',' << r.model << ',' << r.head << ',' << f << ','
              << format_double(r.report.fold_metrics[f]) << '\n';
        }
      }
      write_text_file((fs::path(out_dir) / "eval_report.csv").string(), out.str());
    }
    {
      std::ostringstream out;
      out << "model,head,mean_f1,std_f1\n";
      for (const auto& r : rows) {
        if (r.task != "trend") continue;
        out << r.model << ',' << r.head << ',' << format_double(r.report.mean) << ','
            << format_double(r.report.stddev) << '\n';
      }
      write_text_file((fs::path(out_dir) / "trend_summary.csv").string(), out.str());
    }
    {
      std::ostringstream out;
      out << "model,mean_rmse_days,std_rmse_days,mean_rmse_rate\n";
      for (const auto& r : rows) {
        if (r.task != "active") continue;
        out << r.model << ',' << format_double(r.report.mean) << ','
            << format_double(r.report.stddev) << ','
            << format_double(r.report.mean / ds.config.horizon_days) << '\n';
      }
      write_text_file((fs::path(out_dir) / "active_summary.csv").string(), out.str());
    }
    {
      // Most frequent first actions over all observation sessions.
      std::vector<std::int64_t> counts(static_cast<std::size_t>(alphabet.action_count()), 0);
      std::int64_t total = 0;
      for (const auto& u : ds.users) {
        for (const Session& s : u.activity.sessions) {
          ++counts[static_cast<std::size_t>(s.actions.front())];
          ++total;
        }
      }
      std::ostringstream out;
      out << "action,share\n";
      for (int a = 0; a < alphabet.action_count(); ++a) {
        out << alphabet.action_name(a) << ','
            << format_double(total > 0 ? static_cast<double>(counts[static_cast<std::size_t>(a)]) /
                                             static_cast<double>(total)
                                       : 0.0)
            << '\n';
      }
      write_text_file((fs::path(out_dir) / "first_actions.csv").string(), out.str());
    }
    m.outputs = {"eval_report.csv", "trend_summary.csv", "active_summary.csv",
                 "first_actions.csv"};

    const std::string clusters_path = opts.get("clusters", "");
    if (!clusters_path.empty()) {
      require_file(clusters_path);
      add_input(m, clusters_path);
      std::ifstream cin_(clusters_path);
      const UserMatrix cm = read_user_matrix_csv(cin_);
      std::map<std::string, int> cluster_of;
      for (std::size_t i = 0; i < cm.user_ids.size(); ++i) {
        cluster_of[cm.user_ids[i]] = static_cast<int>(cm.rows[i].empty() ? 0 : cm.rows[i][0]);
      }
      std::vector<int> assignment;
      std::vector<double> rates;
      for (const auto& u : ds.users) {
        auto it = cluster_of.find(u.user_id);
        if (it == cluster_of.end()) continue;
        assignment.push_back(it->second);
        rates.push_back(u.target_days / ds.config.horizon_days);
      }
      if (!assignment.empty()) {
        const auto profile = cluster_engagement_profile(assignment, rates);
        std::ostringstream out;
        out << "cluster,size,mean_rate,std_rate\n";
        for (const auto& row : profile) {
          out << row.cluster << ',' << row.size << ',' << format_double(row.mean_rate) << ','
              << format_double(row.std_rate) << '\n';
        }
        write_text_file((fs::path(out_dir) / "cluster_rates.csv").string(), out.str());
        m.outputs.push_back("cluster_rates.csv");
      }
    }
    write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
    std::cout << "report: " << rows.size() << " model runs on " << ds.users.size()
              << " users -> " << out_dir << "\n";
  });
}

}  // namespace ag::pipeline
