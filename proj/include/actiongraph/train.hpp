#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "actiongraph/dataset.hpp"
#include "actiongraph/models.hpp"

namespace ag {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  OptimizerConfig opt;
  bool early_stop = true;
  int patience = 5;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct TrainCurvePoint {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;  // macro-F1 or -RMSE when a validation split exists
  bool has_val = false;
};

struct TrainResult {
  std::vector<TrainCurvePoint> curve;
  int best_epoch = -1;
};

/// Argmax with ties resolved toward the lowest class index.
int argmax_class(const std::vector<double>& scores);

/// Macro-averaged F1; per-class F1 is 0 when its denominator is 0.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted, int classes);

/// RMSE in active-day units; predictions are clamped into [lo, hi] first.
double rmse_days(const std::vector<double>& truth, std::vector<double> predicted, double lo = 0.0,
                 double hi = 14.0);

/// Mini-batch training, deterministic per seed. With early stopping a seeded
/// validation split is carved out of the training indices; the best-epoch
/// parameters are restored at the end. Throws NumericError on a non-finite
/// loss.
TrainResult train_model(ForecastModel& model, const std::vector<Sample>& samples,
                        const std::vector<int>& train_idx, const TrainConfig& cfg);

/// Macro-F1 (trend) or clamped RMSE in days (active) over `idx`.
double evaluate_model(ForecastModel& model, const std::vector<Sample>& samples,
                      const std::vector<int>& idx, int horizon_days = 14);

struct CvConfig {
  int n_folds = 10;
  double test_fraction = 0.2;
  std::uint64_t fold_seed = 0;  // shared across model kinds for paired folds
  TrainConfig train;
};

struct CvReport {
  std::vector<double> fold_metrics;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

/// Repeated seeded 80:20 shuffles; fold splits depend only on (fold_seed,
/// fold index), so different model specs see identical folds.
CvReport cross_validate(const ModelSpec& spec, const std::vector<UserData>& users,
                        const CvConfig& cfg);

// ---------------------------------------------------------------------------
// L1 feature selection
// ---------------------------------------------------------------------------

struct L1Config {
  double lambda = 0.01;
  int iters = 800;
  double lr = 0.05;
};

struct L1Result {
  Tensor2 weights;  // features x classes
  std::vector<double> bias;
  std::vector<int> ranking;          // feature indices, magnitude descending
  std::vector<double> magnitude;     // sum_c |w_fc| per feature
  std::vector<int> pruned;           // features with all-zero coefficients
};

/// Linear multi-class SVM with an L1 penalty, optimized by full-batch
/// subgradient steps with soft-threshold shrinkage (so pruned coefficients
/// are exactly zero). Bias stays unpenalized. Deterministic (zero init).
L1Result l1_select(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   int classes, const L1Config& cfg);

}  // namespace ag
