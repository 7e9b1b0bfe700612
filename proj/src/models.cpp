#include "actiongraph/models.hpp"

#include <cmath>

#include "actiongraph/errors.hpp"

namespace ag {

std::string to_string(Task t) { return t == Task::kTrend ? "trend" : "active"; }

std::string to_string(HeadKind h) {
  switch (h) {
    case HeadKind::kSoftmax: return "softmax";
    case HeadKind::kHinge: return "hinge";
    case HeadKind::kLinearMse: return "linear";
  }
  return "?";
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kFeature: return "feature";
    case ModelKind::kActivityLstm: return "activity_lstm";
    case ModelKind::kStaticGcn: return "static_gcn";
    case ModelKind::kTemporalGcnLstm: return "temporal_gcn_lstm";
    case ModelKind::kMultiChannel: return "multichannel";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "trend") return Task::kTrend;
  if (s == "active") return Task::kActive;
  throw UsageError("unknown task: " + s);
}

HeadKind head_from_string(const std::string& s) {
  if (s == "softmax") return HeadKind::kSoftmax;
  if (s == "hinge" || s == "svm") return HeadKind::kHinge;
  if (s == "linear") return HeadKind::kLinearMse;
  throw UsageError("unknown head: " + s);
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "feature") return ModelKind::kFeature;
  if (s == "activity_lstm") return ModelKind::kActivityLstm;
  if (s == "static_gcn") return ModelKind::kStaticGcn;
  if (s == "temporal_gcn_lstm") return ModelKind::kTemporalGcnLstm;
  if (s == "multichannel") return ModelKind::kMultiChannel;
  throw UsageError("unknown model kind: " + s);
}

void ForecastModel::zero_grads() {
  for (Param* p : params_) p->grad.zero();
}

std::size_t ForecastModel::param_count() const {
  std::size_t n = 0;
  for (const Param* p : params_) n += p->value.size();
  return n;
}

void ForecastModel::register_params(std::vector<Param*> ps) {
  params_.insert(params_.end(), ps.begin(), ps.end());
}

double ForecastModel::head_loss(const Tensor2& scores, const std::vector<const Sample*>& batch,
                                Tensor2& dscores) const {
  if (head_ == HeadKind::kLinearMse) {
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) y[i] = batch[i]->label_value;
    return mse_loss(scores, y, &dscores);
  }
  std::vector<int> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) y[i] = batch[i]->label_class;
  if (head_ == HeadKind::kSoftmax) return softmax_xent(scores, y, nullptr, &dscores);
  return multiclass_hinge(scores, y, &dscores);
}

double ForecastModel::forward_loss(const std::vector<const Sample*>& batch, bool train,
                                   Rng* dropout_rng) {
  if (batch.empty()) throw UsageError("forward_loss: empty batch");
  const Tensor2& scores = forward_scores(batch, train, dropout_rng);
  return head_loss(scores, batch, dscores_);
}

void ForecastModel::backward() { backward_from_scores(dscores_); }

void ForecastModel::predict(const Sample& sample, std::vector<double>& out) {
  const Tensor2& scores = forward_scores({&sample}, false, nullptr);
  out.assign(scores.d.begin(), scores.d.begin() + scores.cols);
}

namespace {

// H0 = the adjacency itself: block b of the stack is sample b's probability
// matrix.
void fill_adjacency_inputs(const std::vector<const ActionGraph*>& graphs, int n, Tensor2& h0) {
  const int B = static_cast<int>(graphs.size());
  h0.ensure(B * n, n);
  for (int b = 0; b < B; ++b) {
    std::copy(graphs[static_cast<std::size_t>(b)]->prob.begin(),
              graphs[static_cast<std::size_t>(b)]->prob.end(),
              h0.d.begin() + static_cast<std::size_t>(b) * n * n);
  }
}

int active_node_count(const ActionGraph& g) {
  int count = 0;
  for (int u = 0; u < g.n; ++u) {
    bool touched = false;
    for (int v = 0; v < g.n && !touched; ++v) {
      if (g.p(u, v) > 0.0 || g.p(v, u) > 0.0) touched = true;
    }
    if (touched) ++count;
  }
  return count;
}

void fill_divisors(const std::vector<const ActionGraph*>& graphs, int n, bool active_nodes,
                   std::vector<double>& out) {
  out.resize(graphs.size());
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    out[b] = active_nodes ? static_cast<double>(active_node_count(*graphs[b]))
                          : static_cast<double>(n);
  }
}

// Long-double eval-mode forward used by the finite-difference oracle. Mirrors
// the layer formulas over the current (double) parameter values.
namespace hp {

using TL = TensorT<long double>;

TL widen(const Tensor2& t) {
  TL o(t.rows, t.cols);
  for (std::size_t i = 0; i < t.d.size(); ++i) o.d[i] = t.d[i];
  return o;
}

void gate(const TL& z, const TL& w, const TL& b, TL& out, bool tanh_act) {
  mm_nn(z, w, out);
  add_row_vector(out, b);
  for (long double& v : out.d) {
    v = tanh_act ? std::tanh(v) : 1.0L / (1.0L + std::exp(-v));
  }
}

void widen_into(TL& dst, const Tensor2& src) {
  dst.ensure(src.rows, src.cols);
  for (std::size_t i = 0; i < src.d.size(); ++i) dst.d[i] = src.d[i];
}

struct LstmLD {
  struct Layer {
    TL wf, wi, wc, wo, bf, bi, bc, bo;
    int hidden = 0;
  };
  std::vector<Layer> layers;

  static LstmLD from(const LstmStack& stack) {
    LstmLD out;
    out.refresh(stack);
    return out;
  }

  // In-place value copy; reuses buffers across finite-difference evals.
  void refresh(const LstmStack& stack) {
    layers.resize(stack.layers.size());
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
      const LstmLayer& l = stack.layers[i];
      Layer& o = layers[i];
      widen_into(o.wf, l.Wf.value);
      widen_into(o.wi, l.Wi.value);
      widen_into(o.wc, l.Wc.value);
      widen_into(o.wo, l.Wo.value);
      widen_into(o.bf, l.bf.value);
      widen_into(o.bi, l.bi.value);
      widen_into(o.bc, l.bc.value);
      widen_into(o.bo, l.bo.value);
      o.hidden = l.hidden;
    }
  }

  // Eval mode (no dropout); returns the top layer's last hidden state.
  // Workspaces are members so repeated finite-difference evals stay
  // allocation-free.
  const TL& run(const std::vector<TL>& xs) {
    const int B = xs.empty() ? 0 : xs.front().rows;
    h_.resize(layers.size());
    c_.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      h_[l].ensure_zero(B, layers[l].hidden);
      c_[l].ensure_zero(B, layers[l].hidden);
    }
    for (const TL& x : xs) {
      const TL* input = &x;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& ly = layers[l];
        const int H = ly.hidden, I = input->cols;
        z_.ensure(B, H + I);
        for (int b = 0; b < B; ++b) {
          for (int j = 0; j < H; ++j) z_.at(b, j) = h_[l].at(b, j);
          for (int j = 0; j < I; ++j) z_.at(b, H + j) = input->at(b, j);
        }
        gate(z_, ly.wf, ly.bf, f_, false);
        gate(z_, ly.wi, ly.bi, i_, false);
        gate(z_, ly.wc, ly.bc, g_, true);
        gate(z_, ly.wo, ly.bo, o_, false);
        for (std::size_t nidx = 0; nidx < c_[l].d.size(); ++nidx) {
          c_[l].d[nidx] = f_.d[nidx] * c_[l].d[nidx] + i_.d[nidx] * g_.d[nidx];
          h_[l].d[nidx] = o_.d[nidx] * std::tanh(c_[l].d[nidx]);
        }
        input = &h_[l];
      }
    }
    return h_.back();
  }

 private:
  std::vector<TL> h_, c_;
  TL z_, f_, i_, g_, o_;
};

TL gcn_forward(const Tensor2& w, bool relu, const std::vector<const ActionGraph*>& graphs,
               const TL& h_stack) {
  const int B = static_cast<int>(graphs.size());
  const int n = h_stack.rows / B;
  const int in = h_stack.cols;
  TL msg(B * n, in);
  for (int b = 0; b < B; ++b) {
    const ActionGraph& g = *graphs[static_cast<std::size_t>(b)];
    for (int j = 0; j < n; ++j) {
      const long double* hrow = h_stack.d.data() + static_cast<std::size_t>(b * n + j) * in;
      for (int i2 = 0; i2 < n; ++i2) {
        const long double wji = g.p(j, i2);
        if (wji == 0.0L) continue;
        long double* mrow = msg.d.data() + static_cast<std::size_t>(b * n + i2) * in;
        for (int col = 0; col < in; ++col) mrow[col] += wji * hrow[col];
      }
    }
  }
  TL pre;
  mm_nn(msg, widen(w), pre);
  if (relu) {
    for (long double& v : pre.d) v = v > 0.0L ? v : 0.0L;
  }
  return pre;
}

TL pool_blocks(const TL& stack, int n, const std::vector<double>& divisors) {
  const int B = static_cast<int>(divisors.size());
  TL out(B, stack.cols);
  for (int b = 0; b < B; ++b) {
    for (int r = 0; r < n; ++r) {
      const long double* row = stack.d.data() + static_cast<std::size_t>(b * n + r) * stack.cols;
      long double* orow = out.d.data() + static_cast<std::size_t>(b) * stack.cols;
      for (int j = 0; j < stack.cols; ++j) orow[j] += row[j];
    }
    if (divisors[static_cast<std::size_t>(b)] > 0) {
      long double* orow = out.d.data() + static_cast<std::size_t>(b) * stack.cols;
      for (int j = 0; j < stack.cols; ++j) orow[j] /= divisors[static_cast<std::size_t>(b)];
    }
  }
  return out;
}

TL linear(const Linear& lin, const TL& x) {
  TL y;
  mm_nn(x, widen(lin.W.value), y);
  TL b = widen(lin.b.value);
  add_row_vector(y, b);
  return y;
}

long double head_loss(const TL& scores, HeadKind head,
                      const std::vector<const Sample*>& batch) {
  const int B = scores.rows, C = scores.cols;
  long double loss = 0.0L;
  if (head == HeadKind::kLinearMse) {
    for (int b = 0; b < B; ++b) {
      const long double r = scores.at(b, 0) - static_cast<long double>(batch[static_cast<std::size_t>(b)]->label_value);
      loss += r * r;
    }
    return loss / B;
  }
  for (int b = 0; b < B; ++b) {
    const int y = batch[static_cast<std::size_t>(b)]->label_class;
    if (head == HeadKind::kSoftmax) {
      long double mx = scores.at(b, 0);
      for (int c = 1; c < C; ++c) mx = std::max(mx, scores.at(b, c));
      long double z = 0.0L;
      for (int c = 0; c < C; ++c) z += std::exp(scores.at(b, c) - mx);
      loss -= scores.at(b, y) - (std::log(z) + mx);
    } else {
      const long double sy = scores.at(b, y);
      for (int c = 0; c < C; ++c) {
        if (c == y) continue;
        const long double margin = 1.0L - sy + scores.at(b, c);
        if (margin > 0.0L) loss += margin / C;
      }
    }
  }
  return loss / B;
}

TL activity_inputs_step(const std::vector<const Sample*>& batch, int t, int n_actions) {
  TL x(static_cast<int>(batch.size()), n_actions);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (int a = 0; a < n_actions; ++a) {
      x.at(static_cast<int>(b), a) = batch[b]->activity.at(t, a);
    }
  }
  return x;
}

// Freshness tracker for the finite-difference path: the checker re-evaluates
// the loss tens of thousands of times while perturbing one scalar at a time,
// so each stage caches its output and recomputes only when one of its own
// parameters (or the batch) changed.
class ParamWatch {
 public:
  bool fresh(const std::vector<const Param*>& watched,
             const std::vector<const Sample*>& batch) {
    bool same = valid_ && batch == batch_;
    if (same) {
      std::size_t off = 0;
      for (const Param* p : watched) {
        for (std::size_t i = 0; i < p->value.d.size(); ++i, ++off) {
          if (snapshot_[off] != p->value.d[i]) {
            same = false;
            break;
          }
        }
        if (!same) break;
      }
    }
    if (!same) {
      snapshot_.clear();
      for (const Param* p : watched) {
        snapshot_.insert(snapshot_.end(), p->value.d.begin(), p->value.d.end());
      }
      batch_ = batch;
      valid_ = true;
    }
    return same;
  }

 private:
  bool valid_ = false;
  std::vector<double> snapshot_;
  std::vector<const Sample*> batch_;
};

TL adjacency_inputs(const std::vector<const ActionGraph*>& graphs, int n) {
  TL h0(static_cast<int>(graphs.size()) * n, n);
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    for (std::size_t i = 0; i < graphs[b]->prob.size(); ++i) {
      h0.d[b * graphs[b]->prob.size() + i] = graphs[b]->prob[i];
    }
  }
  return h0;
}

}  // namespace hp

class FeatureModel : public ForecastModel {
 public:
  FeatureModel(Task task, HeadKind head, int feature_dim, std::uint64_t seed)
      : ForecastModel(ModelKind::kFeature, task, head),
        dim_(feature_dim),
        head_lin_("head", feature_dim, output_dim(), true) {
    Rng rng = Rng::substream(seed, 1);
    head_lin_.init(rng);
    std::vector<Param*> ps;
    head_lin_.collect(ps);
    register_params(ps);
  }

  long double loss_highprec(const std::vector<const Sample*>& batch) override {
    hp::TL x(static_cast<int>(batch.size()), dim_);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      for (int j = 0; j < dim_; ++j) {
        x.at(static_cast<int>(b), j) = batch[b]->features[static_cast<std::size_t>(j)];
      }
    }
    return hp::head_loss(hp::linear(head_lin_, x), head_, batch);
  }


  void set_output_bias(double value) override {
    head_lin_.b.value.d.assign(head_lin_.b.value.d.size(), value);
  }

 protected:
  const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool, Rng*) override {
    const int B = static_cast<int>(batch.size());
    x_.ensure(B, dim_);
    for (int b = 0; b < B; ++b) {
      const auto& f = batch[static_cast<std::size_t>(b)]->features;
      if (static_cast<int>(f.size()) != dim_) throw UsageError("feature dim mismatch");
      std::copy(f.begin(), f.end(), x_.d.begin() + static_cast<std::size_t>(b) * dim_);
    }
    head_lin_.forward(x_, scores_, head_cache_);
    return scores_;
  }

  void backward_from_scores(const Tensor2& dscores) override {
    head_lin_.backward(head_cache_, dscores, nullptr);
  }

 private:
  int dim_;
  Linear head_lin_;
  Linear::Cache head_cache_;
  Tensor2 x_, scores_;
};

class ActivityLstmModel : public ForecastModel {
 public:
  ActivityLstmModel(Task task, HeadKind head, const ModelDims& dims, const ModelHyper& hyper,
                    std::uint64_t seed)
      : ForecastModel(ModelKind::kActivityLstm, task, head),
        obs_days_(dims.obs_days),
        n_actions_(dims.n_actions),
        stack_("act_lstm", dims.n_actions, hyper.lstm_hidden, hyper.lstm_layers),
        head_lin_("head", hyper.lstm_hidden, output_dim(), true) {
    stack_.dropout_p = hyper.dropout;
    Rng rng = Rng::substream(seed, 2);
    stack_.init(rng);
    head_lin_.init(rng);
    std::vector<Param*> ps;
    stack_.collect(ps);
    head_lin_.collect(ps);
    register_params(ps);
  }

  long double loss_highprec(const std::vector<const Sample*>& batch) override {
    std::vector<Param*> ps;
    stack_.collect(ps);
    if (!hp_watch_.fresh({ps.begin(), ps.end()}, batch)) {
      std::vector<hp::TL> xs;
      xs.reserve(static_cast<std::size_t>(obs_days_));
      for (int t = 0; t < obs_days_; ++t) {
        xs.push_back(hp::activity_inputs_step(batch, t, n_actions_));
      }
      hp_lstm_.refresh(stack_);
      hp_h_ = hp_lstm_.run(xs);
    }
    return hp::head_loss(hp::linear(head_lin_, hp_h_), head_, batch);
  }


  void set_output_bias(double value) override {
    head_lin_.b.value.d.assign(head_lin_.b.value.d.size(), value);
  }

 protected:
  const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool train,
                                Rng* rng) override {
    const int B = static_cast<int>(batch.size());
    xs_.resize(static_cast<std::size_t>(obs_days_));
    for (int t = 0; t < obs_days_; ++t) {
      Tensor2& x = xs_[static_cast<std::size_t>(t)];
      x.ensure(B, n_actions_);
      for (int b = 0; b < B; ++b) {
        const Tensor2& act = batch[static_cast<std::size_t>(b)]->activity;
        for (int a = 0; a < n_actions_; ++a) x.at(b, a) = act.at(t, a);
      }
    }
    h_last_ = stack_.forward(xs_, train, rng, cache_);
    head_lin_.forward(h_last_, scores_, head_cache_);
    return scores_;
  }

  void backward_from_scores(const Tensor2& dscores) override {
    head_lin_.backward(head_cache_, dscores, &dh_last_);
    stack_.backward(cache_, dh_last_, nullptr);
  }

 private:
  int obs_days_, n_actions_;
  LstmStack stack_;
  Linear head_lin_;
  LstmStack::Cache cache_;
  Linear::Cache head_cache_;
  std::vector<Tensor2> xs_;
  Tensor2 h_last_, scores_, dh_last_;
  hp::ParamWatch hp_watch_;
  hp::LstmLD hp_lstm_;
  hp::TL hp_h_;
};

class StaticGcnModel : public ForecastModel {
 public:
  StaticGcnModel(Task task, HeadKind head, const ModelDims& dims, const ModelHyper& hyper,
                 std::uint64_t seed)
      : ForecastModel(ModelKind::kStaticGcn, task, head),
        n_(dims.n_nodes),
        pool_active_(hyper.pool_active_nodes),
        gcn1_("gcn.l0", dims.n_nodes, hyper.gcn_hidden),
        gcn2_("gcn.l1", hyper.gcn_hidden, hyper.gcn_hidden),
        head_lin_("head", hyper.gcn_hidden, output_dim(), true) {
    Rng rng = Rng::substream(seed, 3);
    gcn1_.init(rng);
    gcn2_.init(rng);
    head_lin_.init(rng);
    std::vector<Param*> ps;
    gcn1_.collect(ps);
    gcn2_.collect(ps);
    head_lin_.collect(ps);
    register_params(ps);
  }

  long double loss_highprec(const std::vector<const Sample*>& batch) override {
    if (!hp_watch_.fresh({&gcn1_.W, &gcn2_.W}, batch)) {
      std::vector<const ActionGraph*> graphs(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) graphs[b] = batch[b]->static_graph;
      const hp::TL h0 = hp::adjacency_inputs(graphs, n_);
      const hp::TL h1 = hp::gcn_forward(gcn1_.W.value, gcn1_.relu, graphs, h0);
      const hp::TL h2 = hp::gcn_forward(gcn2_.W.value, gcn2_.relu, graphs, h1);
      std::vector<double> divisors;
      fill_divisors(graphs, n_, pool_active_, divisors);
      hp_pooled_ = hp::pool_blocks(h2, n_, divisors);
    }
    return hp::head_loss(hp::linear(head_lin_, hp_pooled_), head_, batch);
  }


  void set_output_bias(double value) override {
    head_lin_.b.value.d.assign(head_lin_.b.value.d.size(), value);
  }

 protected:
  const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool, Rng*) override {
    graphs_.resize(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!batch[b]->static_graph) throw UsageError("static_gcn: sample lacks a graph");
      graphs_[b] = batch[b]->static_graph;
    }
    fill_adjacency_inputs(graphs_, n_, h0_);
    gcn1_.forward(graphs_, h0_, h1_, c1_);
    gcn2_.forward(graphs_, h1_, h2_, c2_);
    fill_divisors(graphs_, n_, pool_active_, divisors_);
    mean_pool_forward(h2_, n_, divisors_, pooled_);
    head_lin_.forward(pooled_, scores_, head_cache_);
    return scores_;
  }

  void backward_from_scores(const Tensor2& dscores) override {
    head_lin_.backward(head_cache_, dscores, &dpooled_);
    mean_pool_backward(dpooled_, n_, divisors_, dh2_);
    gcn2_.backward(c2_, dh2_, dh1_);
    gcn1_.backward(c1_, dh1_, dh0_);
  }

 private:
  int n_;
  bool pool_active_;
  GcnLayer gcn1_, gcn2_;
  Linear head_lin_;
  GcnLayer::Cache c1_, c2_;
  Linear::Cache head_cache_;
  std::vector<const ActionGraph*> graphs_;
  std::vector<double> divisors_;
  Tensor2 h0_, h1_, h2_, pooled_, scores_;
  Tensor2 dpooled_, dh2_, dh1_, dh0_;
  hp::ParamWatch hp_watch_;
  hp::TL hp_pooled_;
};

// Shared GCN encoder applied to each daily graph; the pooled embeddings form
// the LSTM input sequence.
class TemporalGcnLstmModel : public ForecastModel {
 public:
  TemporalGcnLstmModel(Task task, HeadKind head, const ModelDims& dims, const ModelHyper& hyper,
                       std::uint64_t seed, ModelKind kind = ModelKind::kTemporalGcnLstm,
                       const std::string& prefix = "tgcn")
      : ForecastModel(kind, task, head),
        n_(dims.n_nodes),
        obs_days_(dims.obs_days),
        pool_active_(hyper.pool_active_nodes),
        gcn1_(prefix + ".gcn.l0", dims.n_nodes, hyper.gcn_hidden),
        gcn2_(prefix + ".gcn.l1", hyper.gcn_hidden, hyper.gcn_hidden),
        stack_(prefix + ".lstm", hyper.gcn_hidden, hyper.lstm_hidden, hyper.lstm_layers),
        head_lin_("head", hyper.lstm_hidden, output_dim(), true) {
    stack_.dropout_p = hyper.dropout;
    c1_.resize(static_cast<std::size_t>(obs_days_));
    c2_.resize(static_cast<std::size_t>(obs_days_));
    day_divisors_.resize(static_cast<std::size_t>(obs_days_));
    if (kind == ModelKind::kTemporalGcnLstm) {
      Rng rng = Rng::substream(seed, 4);
      gcn1_.init(rng);
      gcn2_.init(rng);
      stack_.init(rng);
      head_lin_.init(rng);
      std::vector<Param*> ps;
      collect_channel(ps);
      head_lin_.collect(ps);
      register_params(ps);
    }
  }

  void collect_channel(std::vector<Param*>& ps) {
    gcn1_.collect(ps);
    gcn2_.collect(ps);
    stack_.collect(ps);
  }

  void init_channel(Rng& rng) {
    gcn1_.init(rng);
    gcn2_.init(rng);
    stack_.init(rng);
  }

  /// Pooled-embedding sequence -> last hidden state of the LSTM (B x hidden).
  const Tensor2& channel_forward(const std::vector<const Sample*>& batch, bool train, Rng* rng) {
    const int B = static_cast<int>(batch.size());
    xs_.resize(static_cast<std::size_t>(obs_days_));
    day_graphs_.assign(static_cast<std::size_t>(obs_days_), {});
    for (int t = 0; t < obs_days_; ++t) {
      auto& graphs = day_graphs_[static_cast<std::size_t>(t)];
      graphs.resize(static_cast<std::size_t>(B));
      for (int b = 0; b < B; ++b) {
        const auto* temporal = batch[static_cast<std::size_t>(b)]->temporal;
        if (!temporal || static_cast<int>(temporal->size()) != obs_days_) {
          throw UsageError("temporal model: sample lacks the daily graph sequence");
        }
        graphs[static_cast<std::size_t>(b)] = &(*temporal)[static_cast<std::size_t>(t)];
      }
      fill_adjacency_inputs(graphs, n_, h0_);
      gcn1_.forward(graphs, h0_, h1_, c1_[static_cast<std::size_t>(t)]);
      gcn2_.forward(graphs, h1_, h2_, c2_[static_cast<std::size_t>(t)]);
      fill_divisors(graphs, n_, pool_active_, day_divisors_[static_cast<std::size_t>(t)]);
      mean_pool_forward(h2_, n_, day_divisors_[static_cast<std::size_t>(t)],
                        xs_[static_cast<std::size_t>(t)]);
    }
    h_last_ = stack_.forward(xs_, train, rng, lstm_cache_);
    return h_last_;
  }

  void channel_backward(const Tensor2& dh_last) {
    stack_.backward(lstm_cache_, dh_last, &dxs_);
    for (int t = obs_days_ - 1; t >= 0; --t) {
      mean_pool_backward(dxs_[static_cast<std::size_t>(t)], n_,
                         day_divisors_[static_cast<std::size_t>(t)], dh2_);
      gcn2_.backward(c2_[static_cast<std::size_t>(t)], dh2_, dh1_);
      gcn1_.backward(c1_[static_cast<std::size_t>(t)], dh1_, dh0_);
    }
  }

  const hp::TL& channel_forward_hp(const std::vector<const Sample*>& batch) {
    if (!hp_xs_watch_.fresh({&gcn1_.W, &gcn2_.W}, batch)) {
      hp_xs_.clear();
      std::vector<const ActionGraph*> graphs(batch.size());
      std::vector<double> divisors;
      for (int t = 0; t < obs_days_; ++t) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
          graphs[b] = &(*batch[b]->temporal)[static_cast<std::size_t>(t)];
        }
        const hp::TL h0 = hp::adjacency_inputs(graphs, n_);
        const hp::TL h1 = hp::gcn_forward(gcn1_.W.value, gcn1_.relu, graphs, h0);
        const hp::TL h2 = hp::gcn_forward(gcn2_.W.value, gcn2_.relu, graphs, h1);
        fill_divisors(graphs, n_, pool_active_, divisors);
        hp_xs_.push_back(hp::pool_blocks(h2, n_, divisors));
      }
    }
    std::vector<Param*> watched{&gcn1_.W, &gcn2_.W};
    stack_.collect(watched);
    if (!hp_h_watch_.fresh({watched.begin(), watched.end()}, batch)) {
      hp_lstm_.refresh(stack_);
      hp_h_ = hp_lstm_.run(hp_xs_);
    }
    return hp_h_;
  }

  long double loss_highprec(const std::vector<const Sample*>& batch) override {
    return hp::head_loss(hp::linear(head_lin_, channel_forward_hp(batch)), head_, batch);
  }

  int hidden() const { return stack_.hidden(); }


  void set_output_bias(double value) override {
    head_lin_.b.value.d.assign(head_lin_.b.value.d.size(), value);
  }

 protected:
  const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool train,
                                Rng* rng) override {
    const Tensor2& h = channel_forward(batch, train, rng);
    head_lin_.forward(h, scores_, head_cache_);
    return scores_;
  }

  void backward_from_scores(const Tensor2& dscores) override {
    head_lin_.backward(head_cache_, dscores, &dh_last_);
    channel_backward(dh_last_);
  }

 private:
  int n_, obs_days_;
  bool pool_active_;
  GcnLayer gcn1_, gcn2_;
  LstmStack stack_;
  Linear head_lin_;
  std::vector<GcnLayer::Cache> c1_, c2_;
  LstmStack::Cache lstm_cache_;
  Linear::Cache head_cache_;
  std::vector<std::vector<const ActionGraph*>> day_graphs_;
  std::vector<std::vector<double>> day_divisors_;
  std::vector<Tensor2> xs_, dxs_;
  Tensor2 h0_, h1_, h2_, h_last_, scores_;
  Tensor2 dh_last_, dh2_, dh1_, dh0_;
  hp::ParamWatch hp_xs_watch_, hp_h_watch_;
  std::vector<hp::TL> hp_xs_;
  hp::LstmLD hp_lstm_;
  hp::TL hp_h_;
};

// Joint model: [macro || activity-LSTM h_T || temporal-GCN-LSTM h_T] -> head,
// all parameters trained together.
class MultiChannelModel : public ForecastModel {
 public:
  MultiChannelModel(Task task, HeadKind head, const ModelDims& dims, const ModelHyper& hyper,
                    std::uint64_t seed)
      : ForecastModel(ModelKind::kMultiChannel, task, head),
        macro_dim_(dims.macro_dim),
        act_(task, head, dims, hyper, seed, ModelKind::kMultiChannel, "act"),
        tgcn_(task, head, dims, hyper, seed, ModelKind::kMultiChannel, "tgcn"),
        head_lin_("head", dims.macro_dim + 2 * hyper.lstm_hidden, output_dim(), true) {
    Rng rng = Rng::substream(seed, 5);
    act_.stack_ref().init(rng);
    tgcn_.init_channel(rng);
    head_lin_.init(rng);
    std::vector<Param*> ps;
    act_.stack_ref().collect(ps);
    tgcn_.collect_channel(ps);
    head_lin_.collect(ps);
    register_params(ps);
  }

  long double loss_highprec(const std::vector<const Sample*>& batch) override {
    const hp::TL& ha = act_.channel_forward_hp(batch);
    const hp::TL& ht = tgcn_.channel_forward_hp(batch);
    hp::TL z(static_cast<int>(batch.size()), macro_dim_ + ha.cols + ht.cols);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      long double* row = z.d.data() + b * static_cast<std::size_t>(z.cols);
      for (int j = 0; j < macro_dim_; ++j) row[j] = batch[b]->macro[static_cast<std::size_t>(j)];
      for (int j = 0; j < ha.cols; ++j) row[macro_dim_ + j] = ha.at(static_cast<int>(b), j);
      for (int j = 0; j < ht.cols; ++j) {
        row[macro_dim_ + ha.cols + j] = ht.at(static_cast<int>(b), j);
      }
    }
    return hp::head_loss(hp::linear(head_lin_, z), head_, batch);
  }


  void set_output_bias(double value) override {
    head_lin_.b.value.d.assign(head_lin_.b.value.d.size(), value);
  }

 protected:
  const Tensor2& forward_scores(const std::vector<const Sample*>& batch, bool train,
                                Rng* rng) override {
    const int B = static_cast<int>(batch.size());
    const Tensor2& ha = act_.channel_forward(batch, train, rng);
    const Tensor2& ht = tgcn_.channel_forward(batch, train, rng);
    const int da = ha.cols, dt = ht.cols;
    z_.ensure(B, macro_dim_ + da + dt);
    for (int b = 0; b < B; ++b) {
      const auto& macro = batch[static_cast<std::size_t>(b)]->macro;
      if (static_cast<int>(macro.size()) != macro_dim_) {
        throw UsageError("multichannel: macro dim mismatch");
      }
      double* row = z_.d.data() + static_cast<std::size_t>(b) * z_.cols;
      for (int j = 0; j < macro_dim_; ++j) row[j] = macro[static_cast<std::size_t>(j)];
      for (int j = 0; j < da; ++j) row[macro_dim_ + j] = ha.at(b, j);
      for (int j = 0; j < dt; ++j) row[macro_dim_ + da + j] = ht.at(b, j);
    }
    head_lin_.forward(z_, scores_, head_cache_);
    return scores_;
  }

  void backward_from_scores(const Tensor2& dscores) override {
    head_lin_.backward(head_cache_, dscores, &dz_);
    const int B = dz_.rows;
    const int da = act_.hidden(), dt = tgcn_.hidden();
    dha_.ensure(B, da);
    dht_.ensure(B, dt);
    for (int b = 0; b < B; ++b) {
      const double* row = dz_.d.data() + static_cast<std::size_t>(b) * dz_.cols;
      for (int j = 0; j < da; ++j) dha_.at(b, j) = row[macro_dim_ + j];
      for (int j = 0; j < dt; ++j) dht_.at(b, j) = row[macro_dim_ + da + j];
    }
    act_.channel_backward(dha_);
    tgcn_.channel_backward(dht_);
  }

 private:
  // Activity channel mirrors ActivityLstmModel's sequence plumbing.
  class ActivityChannel {
   public:
    ActivityChannel(Task task, HeadKind, const ModelDims& dims, const ModelHyper& hyper,
                    std::uint64_t, ModelKind, const std::string& prefix)
        : obs_days_(dims.obs_days),
          n_actions_(dims.n_actions),
          stack_(prefix + ".lstm", dims.n_actions, hyper.lstm_hidden, hyper.lstm_layers) {
      stack_.dropout_p = hyper.dropout;
      (void)task;
    }

    const Tensor2& channel_forward(const std::vector<const Sample*>& batch, bool train,
                                   Rng* rng) {
      const int B = static_cast<int>(batch.size());
      xs_.resize(static_cast<std::size_t>(obs_days_));
      for (int t = 0; t < obs_days_; ++t) {
        Tensor2& x = xs_[static_cast<std::size_t>(t)];
        x.ensure(B, n_actions_);
        for (int b = 0; b < B; ++b) {
          const Tensor2& act = batch[static_cast<std::size_t>(b)]->activity;
          for (int a = 0; a < n_actions_; ++a) x.at(b, a) = act.at(t, a);
        }
      }
      h_last_ = stack_.forward(xs_, train, rng, cache_);
      return h_last_;
    }

    void channel_backward(const Tensor2& dh_last) { stack_.backward(cache_, dh_last, nullptr); }

    const hp::TL& channel_forward_hp(const std::vector<const Sample*>& batch) {
      std::vector<Param*> ps;
      stack_.collect(ps);
      if (!hp_watch_.fresh({ps.begin(), ps.end()}, batch)) {
        std::vector<hp::TL> xs;
        xs.reserve(static_cast<std::size_t>(obs_days_));
        for (int t = 0; t < obs_days_; ++t) {
          xs.push_back(hp::activity_inputs_step(batch, t, n_actions_));
        }
        hp_lstm_.refresh(stack_);
        hp_h_ = hp_lstm_.run(xs);
      }
      return hp_h_;
    }

    LstmStack& stack_ref() { return stack_; }
    int hidden() const { return stack_.hidden(); }

   private:
    int obs_days_, n_actions_;
    LstmStack stack_;
    LstmStack::Cache cache_;
    std::vector<Tensor2> xs_;
    Tensor2 h_last_;
    hp::ParamWatch hp_watch_;
    hp::LstmLD hp_lstm_;
    hp::TL hp_h_;
  };

  int macro_dim_;
  ActivityChannel act_;
  TemporalGcnLstmModel tgcn_;
  Linear head_lin_;
  Linear::Cache head_cache_;
  Tensor2 z_, scores_, dz_, dha_, dht_;
};

}  // namespace

std::unique_ptr<ForecastModel> build_model(const ModelSpec& spec, const ModelDims& dims) {
  if (spec.task == Task::kActive && spec.head != HeadKind::kLinearMse) {
    throw UsageError("active-rate regression requires the linear head");
  }
  if (spec.task == Task::kTrend && spec.head == HeadKind::kLinearMse) {
    throw UsageError("trend classification requires a softmax or hinge head");
  }
  switch (spec.kind) {
    case ModelKind::kFeature:
      if (dims.feature_dim <= 0) throw UsageError("feature model needs feature_dim");
      return std::make_unique<FeatureModel>(spec.task, spec.head, dims.feature_dim,
                                            spec.init_seed);
    case ModelKind::kActivityLstm:
      return std::make_unique<ActivityLstmModel>(spec.task, spec.head, dims, spec.hyper,
                                                 spec.init_seed);
    case ModelKind::kStaticGcn:
      return std::make_unique<StaticGcnModel>(spec.task, spec.head, dims, spec.hyper,
                                              spec.init_seed);
    case ModelKind::kTemporalGcnLstm:
      return std::make_unique<TemporalGcnLstmModel>(spec.task, spec.head, dims, spec.hyper,
                                                    spec.init_seed);
    case ModelKind::kMultiChannel:
      return std::make_unique<MultiChannelModel>(spec.task, spec.head, dims, spec.hyper,
                                                 spec.init_seed);
  }
  throw UsageError("unknown model kind");
}

}  // namespace ag
