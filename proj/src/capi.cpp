#include "actiongraph/capi.h"

#include <string>

#include "actiongraph/io.hpp"
#include "actiongraph/pipeline.hpp"

struct ag_ctx {
  ag::pipeline::Options options;
  std::string last_error;
};

namespace {

ag_status finish(ag_ctx* ctx, int status, const std::string& error) {
  ctx->last_error = error;
  return static_cast<ag_status>(status);
}

bool check_args(ag_ctx* ctx, std::initializer_list<const char*> args) {
  if (!ctx) return false;
  for (const char* a : args) {
    if (!a) {
      ctx->last_error = "null argument";
      return false;
    }
  }
  ctx->last_error.clear();
  return true;
}

}  // namespace

extern "C" {

const char* ag_version(void) { return ag::kToolVersion; }

ag_ctx* ag_ctx_new(void) { return new (std::nothrow) ag_ctx(); }

void ag_ctx_free(ag_ctx* ctx) { delete ctx; }

const char* ag_ctx_last_error(const ag_ctx* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

ag_status ag_ctx_set(ag_ctx* ctx, const char* key, const char* value) {
  if (!check_args(ctx, {key, value})) return AG_ERR_USAGE;
  try {
    ctx->options.set(key, value);
    return AG_OK;
  } catch (const std::exception& e) {
    return finish(ctx, AG_ERR_USAGE, e.what());
  }
}

ag_status ag_run_simulate(ag_ctx* ctx, const char* out_dir) {
  if (!check_args(ctx, {out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_simulate(ctx->options, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_sessionize(ag_ctx* ctx, const char* events_jsonl,
                            const char* out_sessions_jsonl) {
  if (!check_args(ctx, {events_jsonl, out_sessions_jsonl})) return AG_ERR_USAGE;
  std::string err;
  const int status =
      ag::pipeline::run_sessionize(ctx->options, events_jsonl, out_sessions_jsonl, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_graph(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir) {
  if (!check_args(ctx, {sessions_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_graph(ctx->options, sessions_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_features(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir) {
  if (!check_args(ctx, {sessions_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_features(ctx->options, sessions_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_genes(ag_ctx* ctx, const char* sessions_jsonl, const char* out_dir) {
  if (!check_args(ctx, {sessions_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_genes(ctx->options, sessions_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_cluster(ag_ctx* ctx, const char* matrix_csv, const char* out_dir) {
  if (!check_args(ctx, {matrix_csv, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_cluster(ctx->options, matrix_csv, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_train(ag_ctx* ctx, const char* events_jsonl, const char* out_dir) {
  if (!check_args(ctx, {events_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_train(ctx->options, events_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_eval(ag_ctx* ctx, const char* checkpoint_json, const char* events_jsonl,
                      const char* out_dir) {
  if (!check_args(ctx, {checkpoint_json, events_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status =
      ag::pipeline::run_eval(ctx->options, checkpoint_json, events_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

ag_status ag_run_report(ag_ctx* ctx, const char* events_jsonl, const char* out_dir) {
  if (!check_args(ctx, {events_jsonl, out_dir})) return AG_ERR_USAGE;
  std::string err;
  const int status = ag::pipeline::run_report(ctx->options, events_jsonl, out_dir, &err);
  return finish(ctx, status, err);
}

}  // extern "C"
