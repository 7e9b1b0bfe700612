#pragma once

#include <memory>
#include <string>
#include <vector>

#include "actiongraph/features.hpp"
#include "actiongraph/nn.hpp"

namespace ag {

enum class Task { kTrend, kActive };
enum class HeadKind { kSoftmax, kHinge, kLinearMse };
enum class ModelKind { kFeature, kActivityLstm, kStaticGcn, kTemporalGcnLstm, kMultiChannel };

std::string to_string(Task t);
std::string to_string(HeadKind h);
std::string to_string(ModelKind k);
Task task_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);
ModelKind model_kind_from_string(const std::string& s);

/// One user's model-ready inputs. Feature/macro/activity values arrive already
/// scaled; graphs are the raw transition-probability matrices.
struct Sample {
  std::vector<double> features;
  std::vector<double> macro;
  Tensor2 activity;  // obs_days x n_actions
  const ActionGraph* static_graph = nullptr;
  const std::vector<ActionGraph>* temporal = nullptr;
  int label_class = 0;
  double label_value = 0.0;
};

struct ModelDims {
  int n_nodes = 12;
  int n_actions = 10;
  int obs_days = 14;
  int feature_dim = 0;
  int macro_dim = 6;
};

struct ModelHyper {
  int lstm_hidden = 32;
  int gcn_hidden = 20;
  int lstm_layers = 2;
  double dropout = 0.5;
  bool pool_active_nodes = false;  // alternative mean-pool divisor
};

struct ModelSpec {
  ModelKind kind = ModelKind::kMultiChannel;
  Task task = Task::kTrend;
  HeadKind head = HeadKind::kSoftmax;
  FeatureConfig features;  // feature models only
  ModelHyper hyper;
  std::uint64_t init_seed = 0;
};

class ForecastModel {
 public:
  ForecastModel(ModelKind kind, Task task, HeadKind head)
      : kind_(kind), task_(task), head_(head) {}
  virtual ~ForecastModel() = default;

  /// Batch-mean loss; fills caches consumed by backward().
  double forward_loss(const std::vector<const Sample*>& batch, bool train, Rng* dropout_rng);
  void backward();
  /// Eval-mode head outputs: class logits for trend, a single value for the
  /// active-days regression.
  void predict(const Sample& sample, std::vector<double>& out);
  /// Eval-mode loss recomputed in long double; backs the finite-difference
  /// gradient oracle.
  virtual long double loss_highprec(const std::vector<const Sample*>& batch) = 0;
  /// Fills the head bias; the trainer warm-starts regression heads at the
  /// training-target mean so epochs go into the signal, not the offset.
  virtual void set_output_bias(double value) = 0;

  std::vector<Param*>& params() { return params_; }
  void zero_grads();
  std::size_t param_count() const;

  ModelKind kind() const { return kind_; }
  Task task() const { return task_; }
  HeadKind head() const { return head_; }
  int output_dim() const { return task_ == Task::kTrend ? 3 : 1; }

 protected:
  /// Head scores for the batch (B x output_dim), caching whatever the
  /// backward pass needs.
  virtual const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool train,
                                        Rng* dropout_rng) = 0;
  virtual void backward_from_scores(const Tensor2& dscores) = 0;

  void register_params(std::vector<Param*> ps);
  /// Dispatch on head kind; fills dscores.
  double head_loss(const Tensor2& scores, const std::vector<const Sample*>& batch,
                   Tensor2& dscores) const;

  ModelKind kind_;
  Task task_;
  HeadKind head_;
  std::vector<Param*> params_;
  Tensor2 dscores_;
};

/// Validates kind/task/head compatibility, builds the network, and applies
/// seeded Xavier-uniform initialization.
std::unique_ptr<ForecastModel> build_model(const ModelSpec& spec, const ModelDims& dims);

/// Finite-difference adapter over a model bound to a fixed batch.
class ModelGradCheck : public GradCheckable {
 public:
  ModelGradCheck(ForecastModel& model, std::vector<const Sample*> batch)
      : model_(model), batch_(std::move(batch)) {}
  std::vector<Param*> check_params() override { return model_.params(); }
  long double check_loss() override { return model_.loss_highprec(batch_); }
  void check_grads() override {
    model_.zero_grads();
    model_.forward_loss(batch_, false, nullptr);
    model_.backward();
  }

 private:
  ForecastModel& model_;
  std::vector<const Sample*> batch_;
};

}  // namespace ag
