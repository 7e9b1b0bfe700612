// actiongraph CLI: thin argument layer over the shared-library C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actiongraph/capi.h"

namespace {

struct CtxDeleter {
  void operator()(ag_ctx* ctx) const { ag_ctx_free(ctx); }
};
using CtxPtr = std::unique_ptr<ag_ctx, CtxDeleter>;

// Collects --opt style flags and forwards them to ag_ctx_set right before the
// stage runs, so config-file values lose to command-line values per CLI11's
// precedence rules.
class OptionBag {
 public:
  void add(CLI::App* cmd, const std::string& flag, const std::string& key,
           const std::string& help) {
    values_.push_back(std::make_unique<std::string>());
    std::string* slot = values_.back().get();
    keys_.push_back(key);
    slots_.push_back(slot);
    cmd->add_option(flag, *slot, help);
  }

  int apply(ag_ctx* ctx) const {
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (slots_[i]->empty()) continue;
      if (ag_ctx_set(ctx, keys_[i].c_str(), slots_[i]->c_str()) != AG_OK) {
        std::fprintf(stderr, "error: %s\n", ag_ctx_last_error(ctx));
        return AG_ERR_USAGE;
      }
    }
    return AG_OK;
  }

 private:
  std::vector<std::unique_ptr<std::string>> values_;
  std::vector<std::string> keys_;
  std::vector<std::string*> slots_;
};

int report_status(ag_ctx* ctx, ag_status status) {
  if (status != AG_OK) std::fprintf(stderr, "error: %s\n", ag_ctx_last_error(ctx));
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"action-graph user engagement pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value config file (flags win)");
  app.set_version_flag("--version", std::string(ag_version()));

  CtxPtr ctx(ag_ctx_new());
  if (!ctx) {
    std::fprintf(stderr, "error: out of memory\n");
    return AG_ERR_DATA;
  }

  std::string seed, jobs;
  app.add_option("--seed", seed, "default RNG seed for all stages")->envname("AG_SEED");
  app.add_option("--jobs", jobs, "worker parallelism cap")->envname("AG_JOBS");

  struct Stage {
    CLI::App* cmd = nullptr;
    OptionBag opts;
    std::vector<std::string> paths;  // positional arguments, stage-specific
  };

  // simulate
  Stage simulate;
  simulate.cmd = app.add_subcommand("simulate", "generate a synthetic corpus");
  simulate.paths.resize(1);
  simulate.cmd->add_option("out_dir", simulate.paths[0], "output directory")->required();
  simulate.opts.add(simulate.cmd, "--users", "users", "number of users");
  simulate.opts.add(simulate.cmd, "--noise", "noise", "Dirichlet concentration (0 = none)");
  simulate.opts.add(simulate.cmd, "--observation-days", "observation_days", "observation window");
  simulate.opts.add(simulate.cmd, "--horizon-days", "horizon_days", "future window");
  simulate.opts.add(simulate.cmd, "--archetype-weights", "archetype_weights",
                    "comma list over chatter,snapper,story_viewer,creator");
  simulate.opts.add(simulate.cmd, "--lambda-min", "lambda_min", "min sessions/day");
  simulate.opts.add(simulate.cmd, "--lambda-max", "lambda_max", "max sessions/day");
  simulate.opts.add(simulate.cmd, "--link-rate", "link_rate", "engagement-link rate weight");
  simulate.opts.add(simulate.cmd, "--link-richness", "link_richness",
                    "engagement-link richness weight");
  simulate.opts.add(simulate.cmd, "--link-drift", "link_drift", "engagement-link drift weight");
  simulate.opts.add(simulate.cmd, "--link-intercept", "link_intercept", "engagement-link bias");
  simulate.opts.add(simulate.cmd, "--link-noise-sd", "link_noise_sd", "engagement-link noise");

  // sessionize
  Stage sessionize;
  sessionize.cmd = app.add_subcommand("sessionize", "split an event log into valid sessions");
  sessionize.paths.resize(2);
  sessionize.cmd->add_option("events", sessionize.paths[0], "events JSONL")->required();
  sessionize.cmd->add_option("out", sessionize.paths[1], "output sessions JSONL")->required();
  sessionize.opts.add(sessionize.cmd, "--idle-threshold", "idle_threshold_s",
                      "idle split threshold in seconds (default 25)");
  sessionize.opts.add(sessionize.cmd, "--allow-unknown", "allow_unknown",
                      "drop unknown actions instead of failing (true/false)");

  // graph
  Stage graph;
  graph.cmd = app.add_subcommand("graph", "build static and temporal action graphs");
  graph.paths.resize(2);
  graph.cmd->add_option("sessions", graph.paths[0], "sessions JSONL")->required();
  graph.cmd->add_option("out_dir", graph.paths[1], "output directory")->required();
  graph.opts.add(graph.cmd, "--observation-days", "observation_days", "observation window");

  // features
  Stage features;
  features.cmd = app.add_subcommand("features", "explainable graph features and path rankings");
  features.paths.resize(2);
  features.cmd->add_option("sessions", features.paths[0], "sessions JSONL")->required();
  features.cmd->add_option("out_dir", features.paths[1], "output directory")->required();
  features.opts.add(features.cmd, "--profiles", "profiles", "profiles CSV");
  features.opts.add(features.cmd, "--ngrams", "ngrams", "include per-user n-gram slots");
  features.opts.add(features.cmd, "--min-sessions", "min_sessions", "eligibility threshold");
  features.opts.add(features.cmd, "--path-top-m", "path_top_m", "ranked path slots");
  features.opts.add(features.cmd, "--cycle-top-m", "cycle_top_m", "ranked cycle slots");

  // genes
  Stage genes;
  genes.cmd = app.add_subcommand("genes", "fit LDA session genes");
  genes.paths.resize(2);
  genes.cmd->add_option("sessions", genes.paths[0], "sessions JSONL")->required();
  genes.cmd->add_option("out_dir", genes.paths[1], "output directory")->required();
  genes.opts.add(genes.cmd, "--topics", "topics", "gene count K (default 5)");
  genes.opts.add(genes.cmd, "--iters", "iters", "Gibbs sweeps (default 500)");
  genes.opts.add(genes.cmd, "--infer-iters", "infer_iters", "per-user inference sweeps");
  genes.opts.add(genes.cmd, "--alpha", "alpha", "Dirichlet document prior (default 50/K)");
  genes.opts.add(genes.cmd, "--beta", "beta", "Dirichlet topic prior (default 0.01)");
  genes.opts.add(genes.cmd, "--min-sessions", "min_sessions", "eligibility threshold");

  // cluster
  Stage cluster;
  cluster.cmd = app.add_subcommand("cluster", "k-means over a user feature CSV");
  cluster.paths.resize(2);
  cluster.cmd->add_option("matrix", cluster.paths[0], "user_id + numeric columns CSV")->required();
  cluster.cmd->add_option("out_dir", cluster.paths[1], "output directory")->required();
  cluster.opts.add(cluster.cmd, "--k", "k", "cluster count (0 = silhouette-chosen)");
  cluster.opts.add(cluster.cmd, "--k-min", "k_min", "silhouette search lower bound");
  cluster.opts.add(cluster.cmd, "--k-max", "k_max", "silhouette search upper bound");
  cluster.opts.add(cluster.cmd, "--rates", "rates", "user_id,rate CSV for engagement profile");

  // train
  Stage train;
  train.cmd = app.add_subcommand("train", "train a forecasting model");
  train.paths.resize(2);
  train.cmd->add_option("events", train.paths[0], "events JSONL (28 days)")->required();
  train.cmd->add_option("out_dir", train.paths[1], "output directory")->required();
  train.opts.add(train.cmd, "--model", "model",
                 "feature_softmax|feature_svm|feature_ridge|activity_lstm|static_gcn|"
                 "temporal_gcn_lstm|multichannel");
  train.opts.add(train.cmd, "--task", "task", "trend|active");
  train.opts.add(train.cmd, "--head", "head", "softmax|svm (neural trend models)");
  train.opts.add(train.cmd, "--feature-set", "feature_set", "macro|graph|macro_graph");
  train.opts.add(train.cmd, "--profiles", "profiles", "profiles CSV");
  train.opts.add(train.cmd, "--epochs", "epochs", "training epochs (default 30)");
  train.opts.add(train.cmd, "--batch-size", "batch_size", "mini-batch size (default 32)");
  train.opts.add(train.cmd, "--lr", "lr", "learning rate (default 1e-3)");
  train.opts.add(train.cmd, "--optimizer", "optimizer", "adam|sgd");
  train.opts.add(train.cmd, "--l2", "l2", "classifier-layer L2 (default 1e-3)");
  train.opts.add(train.cmd, "--dropout", "dropout", "LSTM inter-layer dropout (default 0.5)");
  train.opts.add(train.cmd, "--early-stop", "early_stop", "validation early stopping");
  train.opts.add(train.cmd, "--balance", "balance", "1:1:1 class balancing (default true)");
  train.opts.add(train.cmd, "--min-sessions", "min_sessions", "eligibility threshold");

  // eval
  Stage eval;
  eval.cmd = app.add_subcommand("eval", "evaluate a checkpoint on an event log");
  eval.paths.resize(3);
  eval.cmd->add_option("checkpoint", eval.paths[0], "checkpoint.json")->required();
  eval.cmd->add_option("events", eval.paths[1], "events JSONL")->required();
  eval.cmd->add_option("out_dir", eval.paths[2], "output directory")->required();
  eval.opts.add(eval.cmd, "--profiles", "profiles", "profiles CSV");
  eval.opts.add(eval.cmd, "--balance", "balance", "1:1:1 class balancing (default true)");

  // report
  Stage report;
  report.cmd = app.add_subcommand("report", "cross-validated model comparison tables");
  report.paths.resize(2);
  report.cmd->add_option("events", report.paths[0], "events JSONL")->required();
  report.cmd->add_option("out_dir", report.paths[1], "output directory")->required();
  report.opts.add(report.cmd, "--models", "models",
                  "comma list: macro,graph,macro_graph,static_gcn,activity_lstm,"
                  "temporal_gcn_lstm,multichannel");
  report.opts.add(report.cmd, "--tasks", "tasks", "comma list: trend,active");
  report.opts.add(report.cmd, "--heads", "heads", "comma list: softmax,svm");
  report.opts.add(report.cmd, "--folds", "folds", "random 80:20 splits (default 10)");
  report.opts.add(report.cmd, "--epochs", "epochs", "training epochs per fold");
  report.opts.add(report.cmd, "--profiles", "profiles", "profiles CSV");
  report.opts.add(report.cmd, "--clusters", "clusters", "user_id,cluster CSV for rate bars");
  report.opts.add(report.cmd, "--balance", "balance", "1:1:1 class balancing (default true)");

  CLI11_PARSE(app, argc, argv);

  if (!seed.empty() && ag_ctx_set(ctx.get(), "seed", seed.c_str()) != AG_OK) {
    return report_status(ctx.get(), AG_ERR_USAGE);
  }
  if (!jobs.empty() && ag_ctx_set(ctx.get(), "jobs", jobs.c_str()) != AG_OK) {
    return report_status(ctx.get(), AG_ERR_USAGE);
  }

  auto run = [&](Stage& stage, auto&& fn) -> int {
    const int opt_status = stage.opts.apply(ctx.get());
    if (opt_status != AG_OK) return opt_status;
    return report_status(ctx.get(), fn());
  };

  if (simulate.cmd->parsed()) {
    return run(simulate,
               [&]() { return ag_run_simulate(ctx.get(), simulate.paths[0].c_str()); });
  }
  if (sessionize.cmd->parsed()) {
    return run(sessionize, [&]() {
      return ag_run_sessionize(ctx.get(), sessionize.paths[0].c_str(),
                               sessionize.paths[1].c_str());
    });
  }
  if (graph.cmd->parsed()) {
    return run(graph, [&]() {
      return ag_run_graph(ctx.get(), graph.paths[0].c_str(), graph.paths[1].c_str());
    });
  }
  if (features.cmd->parsed()) {
    return run(features, [&]() {
      return ag_run_features(ctx.get(), features.paths[0].c_str(), features.paths[1].c_str());
    });
  }
  if (genes.cmd->parsed()) {
    return run(genes, [&]() {
      return ag_run_genes(ctx.get(), genes.paths[0].c_str(), genes.paths[1].c_str());
    });
  }
  if (cluster.cmd->parsed()) {
    return run(cluster, [&]() {
      return ag_run_cluster(ctx.get(), cluster.paths[0].c_str(), cluster.paths[1].c_str());
    });
  }
  if (train.cmd->parsed()) {
    return run(train, [&]() {
      return ag_run_train(ctx.get(), train.paths[0].c_str(), train.paths[1].c_str());
    });
  }
  if (eval.cmd->parsed()) {
    return run(eval, [&]() {
      return ag_run_eval(ctx.get(), eval.paths[0].c_str(), eval.paths[1].c_str(),
                         eval.paths[2].c_str());
    });
  }
  if (report.cmd->parsed()) {
    return run(report, [&]() {
      return ag_run_report(ctx.get(), report.paths[0].c_str(), report.paths[1].c_str());
    });
  }
  return AG_ERR_USAGE;
}
