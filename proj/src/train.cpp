#include "actiongraph/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "actiongraph/errors.hpp"
#include "actiongraph/rng.hpp"

namespace ag {

int argmax_class(const std::vector<double>& scores) {
  int best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& predicted, int classes) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw UsageError("macro_f1: size mismatch");
  }
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == c;
      const bool p = predicted[i] == c;
      if (t && p) ++tp;
      else if (!t && p) ++fp;
      else if (t && !p) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    total += denom > 0 ? 2.0 * tp / denom : 0.0;
  }
  return total / classes;
}

double rmse_days(const std::vector<double>& truth, std::vector<double> predicted, double lo,
                 double hi) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw UsageError("rmse_days: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double p = std::clamp(predicted[i], lo, hi);
    const double r = p - truth[i];
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double evaluate_model(ForecastModel& model, const std::vector<Sample>& samples,
                      const std::vector<int>& idx, int horizon_days) {
  if (idx.empty()) throw UsageError("evaluate_model: empty index set");
  std::vector<double> out;
  if (model.task() == Task::kTrend) {
    std::vector<int> truth, pred;
    truth.reserve(idx.size());
    pred.reserve(idx.size());
    for (int i : idx) {
      const Sample& s = samples[static_cast<std::size_t>(i)];
      model.predict(s, out);
      truth.push_back(s.label_class);
      pred.push_back(argmax_class(out));
    }
    return macro_f1(truth, pred, model.output_dim());
  }
  std::vector<double> truth, pred;
  truth.reserve(idx.size());
  pred.reserve(idx.size());
  for (int i : idx) {
    const Sample& s = samples[static_cast<std::size_t>(i)];
    model.predict(s, out);
    truth.push_back(s.label_value);
    pred.push_back(out[0]);
  }
  return rmse_days(truth, std::move(pred), 0.0, static_cast<double>(horizon_days));
}

namespace {

std::vector<Tensor2> snapshot_params(ForecastModel& model) {
  std::vector<Tensor2> snap;
  snap.reserve(model.params().size());
  for (Param* p : model.params()) snap.push_back(p->value);
  return snap;
}

void restore_params(ForecastModel& model, const std::vector<Tensor2>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i) model.params()[i]->value = snap[i];
}

}  // namespace

TrainResult train_model(ForecastModel& model, const std::vector<Sample>& samples,
                        const std::vector<int>& train_idx, const TrainConfig& cfg) {
  if (train_idx.empty()) throw UsageError("train_model: empty training set");

  std::vector<int> train = train_idx;
  std::vector<int> val;
  if (cfg.early_stop && cfg.val_fraction > 0.0 &&
      static_cast<int>(train.size()) * cfg.val_fraction >= 1.0 && train.size() >= 20) {
    Rng rng = Rng::substream(cfg.seed, 0x5a1);
    for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.below(i)]);
    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(cfg.val_fraction * static_cast<double>(train.size())));
    val.assign(train.end() - static_cast<std::ptrdiff_t>(n_val), train.end());
    train.resize(train.size() - n_val);
  }

  if (model.task() == Task::kActive) {
    double mean = 0.0;
    for (int i : train) mean += samples[static_cast<std::size_t>(i)].label_value;
    model.set_output_bias(mean / static_cast<double>(train.size()));
  }

  Optimizer optimizer(model.params(), cfg.opt);
  TrainResult result;
  std::vector<Tensor2> best_snapshot;
  double best_metric = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<const Sample*> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = Rng::substream(cfg.seed, 0xe90c + static_cast<std::uint64_t>(epoch));
    Rng dropout_rng = Rng::substream(cfg.seed, 0xd909 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = train.size(); i > 1; --i) {
      std::swap(train[i - 1], train[shuffle_rng.below(i)]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&samples[static_cast<std::size_t>(train[i])]);
      }
      model.zero_grads();
      const double loss = model.forward_loss(batch, true, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batches));
      }
      model.backward();
      optimizer.step();
      epoch_loss += loss;
      ++batches;
    }

    TrainCurvePoint point;
    point.epoch = epoch;
    point.train_loss = batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0;
    if (!val.empty()) {
      point.has_val = true;
      const double metric = evaluate_model(model, samples, val);
      // Higher-is-better score in both tasks (negated RMSE for regression).
      point.val_metric = model.task() == Task::kTrend ? metric : -metric;
      if (point.val_metric > best_metric) {
        best_metric = point.val_metric;
        best_snapshot = snapshot_params(model);
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        result.curve.push_back(point);
        break;
      }
    }
    result.curve.push_back(point);
  }
  if (!best_snapshot.empty()) restore_params(model, best_snapshot);
  if (result.best_epoch < 0 && !result.curve.empty()) {
    result.best_epoch = result.curve.back().epoch;
  }
  return result;
}

CvReport cross_validate(const ModelSpec& spec, const std::vector<UserData>& users,
                        const CvConfig& cfg) {
  if (users.size() < 5) throw DataError("cross_validate: dataset too small");
  const ModelDims dims = dims_from_users(users);

  CvReport report;
  std::vector<int> order(users.size());
  for (int f = 0; f < cfg.n_folds; ++f) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng = Rng::substream(cfg.fold_seed, 0xf01d + static_cast<std::uint64_t>(f));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const std::size_t n_test = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(order.size()))));
    std::vector<int> test(order.end() - static_cast<std::ptrdiff_t>(n_test), order.end());
    std::vector<int> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test));

    FoldInputs fold = make_fold_inputs(users, train);

    ModelSpec fold_spec = spec;
    fold_spec.init_seed = splitmix64(spec.init_seed ^ (0x5eed + static_cast<std::uint64_t>(f)));
    auto model = build_model(fold_spec, dims);

    TrainConfig tc = cfg.train;
    tc.seed = splitmix64(cfg.train.seed ^ (0x7a11 + static_cast<std::uint64_t>(f)));
    train_model(*model, fold.samples, train, tc);
    report.fold_metrics.push_back(evaluate_model(*model, fold.samples, test));
  }

  double mean = 0.0;
  for (double m : report.fold_metrics) mean += m;
  mean /= static_cast<double>(report.fold_metrics.size());
  double var = 0.0;
  for (double m : report.fold_metrics) var += (m - mean) * (m - mean);
  report.mean = mean;
  report.stddev = report.fold_metrics.size() > 1
                      ? std::sqrt(var / (static_cast<double>(report.fold_metrics.size()) - 1.0))
                      : 0.0;
  return report;
}

L1Result l1_select(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                   int classes, const L1Config& cfg) {
  if (x.empty() || x.size() != y.size()) throw UsageError("l1_select: bad inputs");
  const int n = static_cast<int>(x.size());
  const int f = static_cast<int>(x.front().size());

  L1Result res;
  res.weights = Tensor2(f, classes);
  res.bias.assign(static_cast<std::size_t>(classes), 0.0);

  Tensor2 grad(f, classes);
  std::vector<double> bias_grad(static_cast<std::size_t>(classes));
  std::vector<double> scores(static_cast<std::size_t>(classes));
  for (int it = 0; it < cfg.iters; ++it) {
    grad.zero();
    std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto& xi = x[static_cast<std::size_t>(i)];
      for (int c = 0; c < classes; ++c) {
        double s = res.bias[static_cast<std::size_t>(c)];
        for (int j = 0; j < f; ++j) s += res.weights.at(j, c) * xi[static_cast<std::size_t>(j)];
        scores[static_cast<std::size_t>(c)] = s;
      }
      const int yi = y[static_cast<std::size_t>(i)];
      for (int c = 0; c < classes; ++c) {
        if (c == yi) continue;
        if (1.0 - scores[static_cast<std::size_t>(yi)] + scores[static_cast<std::size_t>(c)] > 0.0) {
          const double w = 1.0 / (classes * n);
          for (int j = 0; j < f; ++j) {
            grad.at(j, c) += w * xi[static_cast<std::size_t>(j)];
            grad.at(j, yi) -= w * xi[static_cast<std::size_t>(j)];
          }
          bias_grad[static_cast<std::size_t>(c)] += w;
          bias_grad[static_cast<std::size_t>(yi)] -= w;
        }
      }
    }
    const double lr = cfg.lr / (1.0 + 0.01 * it);
    const double shrink = lr * cfg.lambda;
    for (int j = 0; j < f; ++j) {
      for (int c = 0; c < classes; ++c) {
        double w = res.weights.at(j, c) - lr * grad.at(j, c);
        // Soft threshold keeps pruned coefficients exactly at zero.
        if (w > shrink) w -= shrink;
        else if (w < -shrink) w += shrink;
        else w = 0.0;
        res.weights.at(j, c) = w;
      }
    }
    for (int c = 0; c < classes; ++c) {
      res.bias[static_cast<std::size_t>(c)] -= lr * bias_grad[static_cast<std::size_t>(c)];
    }
  }

  res.magnitude.assign(static_cast<std::size_t>(f), 0.0);
  for (int j = 0; j < f; ++j) {
    for (int c = 0; c < classes; ++c) res.magnitude[static_cast<std::size_t>(j)] += std::abs(res.weights.at(j, c));
    if (res.magnitude[static_cast<std::size_t>(j)] == 0.0) res.pruned.push_back(j);
  }
  res.ranking.resize(static_cast<std::size_t>(f));
  for (int j = 0; j < f; ++j) res.ranking[static_cast<std::size_t>(j)] = j;
  std::stable_sort(res.ranking.begin(), res.ranking.end(), [&](int a, int b) {
    return res.magnitude[static_cast<std::size_t>(a)] > res.magnitude[static_cast<std::size_t>(b)];
  });
  return res;
}

}  // namespace ag
