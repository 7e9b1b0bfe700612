#include "actiongraph/nn.hpp"

#include <cassert>
#include <cmath>

#include "actiongraph/errors.hpp"

namespace ag {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// gate = act(z·W + b) for one gate; pre-activation overwritten in place.
void gate_forward(const Tensor2& z, const Param& w, const Param& b, Tensor2& gate,
                  bool tanh_act) {
  mm_nn(z, w.value, gate);
  add_row_vector(gate, b.value);
  for (double& v : gate.d) v = tanh_act ? std::tanh(v) : sigmoid(v);
}

}  // namespace

void xavier_uniform(Tensor2& w, Rng& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / (w.rows + w.cols));
  for (double& v : w.d) v = rng.uniform(-limit, limit);
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmLayer::LstmLayer(const std::string& prefix, int input_dim, int hidden_dim)
    : input(input_dim),
      hidden(hidden_dim),
      Wf(prefix + ".Wf", hidden_dim + input_dim, hidden_dim),
      Wi(prefix + ".Wi", hidden_dim + input_dim, hidden_dim),
      Wc(prefix + ".Wc", hidden_dim + input_dim, hidden_dim),
      Wo(prefix + ".Wo", hidden_dim + input_dim, hidden_dim),
      bf(prefix + ".bf", 1, hidden_dim),
      bi(prefix + ".bi", 1, hidden_dim),
      bc(prefix + ".bc", 1, hidden_dim),
      bo(prefix + ".bo", 1, hidden_dim) {}

void LstmLayer::init(Rng& rng) {
  xavier_uniform(Wf.value, rng);
  xavier_uniform(Wi.value, rng);
  xavier_uniform(Wc.value, rng);
  xavier_uniform(Wo.value, rng);
}

void LstmLayer::collect(std::vector<Param*>& out) {
  for (Param* p : {&Wf, &Wi, &Wc, &Wo, &bf, &bi, &bc, &bo}) out.push_back(p);
}

void lstm_step(const LstmLayer& layer, const Tensor2& x, const Tensor2& h_prev,
               const Tensor2& c_prev, Tensor2& h_out, Tensor2& c_out, LstmStepCache* cache) {
  if (x.cols != layer.input || h_prev.cols != layer.hidden || c_prev.cols != layer.hidden ||
      x.rows != h_prev.rows || x.rows != c_prev.rows) {
    throw UsageError("lstm_step: shape mismatch");
  }
  const int B = x.rows, H = layer.hidden, I = layer.input;
  LstmStepCache local;
  LstmStepCache& c = cache ? *cache : local;

  c.z.ensure(B, H + I);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) c.z.at(b, j) = h_prev.at(b, j);
    for (int j = 0; j < I; ++j) c.z.at(b, H + j) = x.at(b, j);
  }
  gate_forward(c.z, layer.Wf, layer.bf, c.f, false);
  gate_forward(c.z, layer.Wi, layer.bi, c.i, false);
  gate_forward(c.z, layer.Wc, layer.bc, c.g, true);
  gate_forward(c.z, layer.Wo, layer.bo, c.o, false);

  c.c_prev = c_prev;
  c.c.ensure(B, H);
  c.tanh_c.ensure(B, H);
  h_out.ensure(B, H);
  c_out.ensure(B, H);
  for (std::size_t n = 0; n < c.c.d.size(); ++n) {
    c.c.d[n] = c.f.d[n] * c_prev.d[n] + c.i.d[n] * c.g.d[n];
    c.tanh_c.d[n] = std::tanh(c.c.d[n]);
    h_out.d[n] = c.o.d[n] * c.tanh_c.d[n];
    c_out.d[n] = c.c.d[n];
  }
}

void lstm_step_backward(LstmLayer& layer, const LstmStepCache& cache, const Tensor2& dh,
                        const Tensor2& dc_in, Tensor2& dx, Tensor2& dh_prev, Tensor2& dc_prev) {
  const int B = cache.z.rows, H = layer.hidden, I = layer.input;
  static thread_local Tensor2 dpre_f, dpre_i, dpre_g, dpre_o, dz, bsum;
  dpre_f.ensure(B, H);
  dpre_i.ensure(B, H);
  dpre_g.ensure(B, H);
  dpre_o.ensure(B, H);
  dc_prev.ensure(B, H);

  for (std::size_t n = 0; n < cache.c.d.size(); ++n) {
    const double f = cache.f.d[n], i = cache.i.d[n], g = cache.g.d[n], o = cache.o.d[n];
    const double tc = cache.tanh_c.d[n];
    const double dht = dh.d.empty() ? 0.0 : dh.d[n];
    const double dc = (dc_in.d.empty() ? 0.0 : dc_in.d[n]) + dht * o * (1.0 - tc * tc);
    dpre_o.d[n] = dht * tc * o * (1.0 - o);
    dpre_f.d[n] = dc * cache.c_prev.d[n] * f * (1.0 - f);
    dpre_i.d[n] = dc * g * i * (1.0 - i);
    dpre_g.d[n] = dc * i * (1.0 - g * g);
    dc_prev.d[n] = dc * f;
  }

  // Parameter gradients.
  mm_tn(cache.z, dpre_f, layer.Wf.grad, true);
  mm_tn(cache.z, dpre_i, layer.Wi.grad, true);
  mm_tn(cache.z, dpre_g, layer.Wc.grad, true);
  mm_tn(cache.z, dpre_o, layer.Wo.grad, true);
  col_sums(dpre_f, layer.bf.grad, true);
  col_sums(dpre_i, layer.bi.grad, true);
  col_sums(dpre_g, layer.bc.grad, true);
  col_sums(dpre_o, layer.bo.grad, true);

  // Input-side gradients via dz = sum_g dpre_g · W_gᵀ.
  mm_nt(dpre_f, layer.Wf.value, dz);
  mm_nt(dpre_i, layer.Wi.value, dz, true);
  mm_nt(dpre_g, layer.Wc.value, dz, true);
  mm_nt(dpre_o, layer.Wo.value, dz, true);

  dh_prev.ensure(B, H);
  dx.ensure(B, I);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) dh_prev.at(b, j) = dz.at(b, j);
    for (int j = 0; j < I; ++j) dx.at(b, j) = dz.at(b, H + j);
  }
}

LstmStack::LstmStack(const std::string& prefix, int input_dim, int hidden_dim, int n_layers) {
  for (int l = 0; l < n_layers; ++l) {
    layers.emplace_back(prefix + ".l" + std::to_string(l), l == 0 ? input_dim : hidden_dim,
                        hidden_dim);
  }
}

void LstmStack::init(Rng& rng) {
  for (auto& l : layers) l.init(rng);
}

void LstmStack::collect(std::vector<Param*>& out) {
  for (auto& l : layers) l.collect(out);
}

Tensor2 LstmStack::forward(const std::vector<Tensor2>& xs, bool train, Rng* dropout_rng,
                           Cache& cache) const {
  const int T = static_cast<int>(xs.size());
  const int L = static_cast<int>(layers.size());
  const int B = xs.empty() ? 0 : xs.front().rows;
  cache.steps = T;
  cache.batch = B;
  cache.train = train && dropout_p > 0.0;
  cache.step_caches.assign(static_cast<std::size_t>(L), {});
  cache.layer_inputs.assign(static_cast<std::size_t>(L), {});
  cache.masks.assign(L > 0 ? static_cast<std::size_t>(L - 1) : 0, {});
  cache.h.assign(static_cast<std::size_t>(L), {});
  cache.c.assign(static_cast<std::size_t>(L), {});
  for (int l = 0; l < L; ++l) {
    cache.step_caches[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(T));
    cache.layer_inputs[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(T));
    cache.h[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(T));
    cache.c[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(T));
    if (l + 1 < L) cache.masks[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(T));
  }

  Tensor2 h_zero(B, layers.front().hidden);
  for (int t = 0; t < T; ++t) {
    const Tensor2* input = &xs[static_cast<std::size_t>(t)];
    for (int l = 0; l < L; ++l) {
      auto& li = cache.layer_inputs[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
      li = *input;
      const Tensor2& h_prev =
          t > 0 ? cache.h[static_cast<std::size_t>(l)][static_cast<std::size_t>(t - 1)] : h_zero;
      const Tensor2& c_prev =
          t > 0 ? cache.c[static_cast<std::size_t>(l)][static_cast<std::size_t>(t - 1)] : h_zero;
      lstm_step(layers[static_cast<std::size_t>(l)], li, h_prev, c_prev,
                cache.h[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)],
                cache.c[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)],
                &cache.step_caches[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)]);
      if (l + 1 < L) {
        auto& mask = cache.masks[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
        auto& dropped = cache.layer_inputs[static_cast<std::size_t>(l + 1)][static_cast<std::size_t>(t)];
        dropout_forward(cache.h[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)],
                        dropout_p, cache.train, dropout_rng, dropped, &mask);
        input = &dropped;
      }
    }
  }
  return cache.h.back().back();
}

void LstmStack::backward(const Cache& cache, const Tensor2& dh_last, std::vector<Tensor2>* dxs) {
  const int T = cache.steps;
  const int L = static_cast<int>(layers.size());
  const int B = cache.batch;
  if (dxs) dxs->assign(static_cast<std::size_t>(T), Tensor2());

  std::vector<Tensor2> dh_rec(static_cast<std::size_t>(L)), dc_rec(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    dh_rec[static_cast<std::size_t>(l)].ensure_zero(B, layers[static_cast<std::size_t>(l)].hidden);
    dc_rec[static_cast<std::size_t>(l)].ensure_zero(B, layers[static_cast<std::size_t>(l)].hidden);
  }

  Tensor2 dx, dh_prev, dc_prev, dmasked;
  for (int t = T - 1; t >= 0; --t) {
    for (int l = L - 1; l >= 0; --l) {
      Tensor2& dh = dh_rec[static_cast<std::size_t>(l)];
      if (l == L - 1 && t == T - 1) {
        for (std::size_t n = 0; n < dh.d.size(); ++n) dh.d[n] += dh_last.d[n];
      }
      lstm_step_backward(layers[static_cast<std::size_t>(l)],
                         cache.step_caches[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)],
                         dh, dc_rec[static_cast<std::size_t>(l)], dx, dh_prev, dc_prev);
      dh_rec[static_cast<std::size_t>(l)] = dh_prev;
      dc_rec[static_cast<std::size_t>(l)] = dc_prev;
      if (l > 0) {
        // Through the inter-layer dropout into the lower layer's hidden state.
        if (cache.train) {
          dropout_backward(dx, cache.masks[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(t)],
                           dmasked);
        } else {
          dmasked = dx;
        }
        Tensor2& lower = dh_rec[static_cast<std::size_t>(l - 1)];
        for (std::size_t n = 0; n < lower.d.size(); ++n) lower.d[n] += dmasked.d[n];
      } else if (dxs) {
        (*dxs)[static_cast<std::size_t>(t)] = dx;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// GCN
// ---------------------------------------------------------------------------

GcnLayer::GcnLayer(const std::string& prefix, int in_dim, int out_dim)
    : in(in_dim), out(out_dim), W(prefix + ".W", in_dim, out_dim) {}

void GcnLayer::init(Rng& rng) { xavier_uniform(W.value, rng); }

void GcnLayer::collect(std::vector<Param*>& out_params) { out_params.push_back(&W); }

void GcnLayer::forward(const std::vector<const ActionGraph*>& graphs, const Tensor2& h_stack,
                       Tensor2& out_stack, Cache& cache) const {
  const int B = static_cast<int>(graphs.size());
  if (B == 0 || h_stack.cols != in || h_stack.rows % B != 0) {
    throw UsageError("gcn_layer: shape mismatch");
  }
  const int n = h_stack.rows / B;
  cache.n = n;
  cache.batch = B;
  cache.graphs = graphs;

  // msg_b = A_bᵀ · H_b
  cache.msg.ensure_zero(B * n, in);
  for (int b = 0; b < B; ++b) {
    const ActionGraph& g = *graphs[static_cast<std::size_t>(b)];
    for (int j = 0; j < n; ++j) {
      const double* hrow = h_stack.d.data() + static_cast<std::size_t>(b * n + j) * in;
      for (int i2 = 0; i2 < n; ++i2) {
        const double w = g.p(j, i2);
        if (w == 0.0) continue;
        double* mrow = cache.msg.d.data() + static_cast<std::size_t>(b * n + i2) * in;
        for (int c = 0; c < in; ++c) mrow[c] += w * hrow[c];
      }
    }
  }
  mm_nn(cache.msg, W.value, cache.pre);
  out_stack.ensure(B * n, out);
  for (std::size_t i2 = 0; i2 < cache.pre.d.size(); ++i2) {
    out_stack.d[i2] = relu ? std::max(0.0, cache.pre.d[i2]) : cache.pre.d[i2];
  }
}

void GcnLayer::backward(const Cache& cache, const Tensor2& dout_stack, Tensor2& dh_stack) {
  const int B = cache.batch, n = cache.n;
  static thread_local Tensor2 dpre, dmsg;
  dpre.ensure(B * n, out);
  for (std::size_t i2 = 0; i2 < dpre.d.size(); ++i2) {
    dpre.d[i2] = (!relu || cache.pre.d[i2] > 0.0) ? dout_stack.d[i2] : 0.0;
  }
  mm_tn(cache.msg, dpre, W.grad, true);
  mm_nt(dpre, W.value, dmsg);

  // dH_b = A_b · dmsg_b
  dh_stack.ensure_zero(B * n, in);
  for (int b = 0; b < B; ++b) {
    const ActionGraph& g = *cache.graphs[static_cast<std::size_t>(b)];
    for (int j = 0; j < n; ++j) {
      double* drow = dh_stack.d.data() + static_cast<std::size_t>(b * n + j) * in;
      for (int i2 = 0; i2 < n; ++i2) {
        const double w = g.p(j, i2);
        if (w == 0.0) continue;
        const double* mrow = dmsg.d.data() + static_cast<std::size_t>(b * n + i2) * in;
        for (int c = 0; c < in; ++c) drow[c] += w * mrow[c];
      }
    }
  }
}

Tensor2 mean_pool_rows(const Tensor2& h) {
  Tensor2 out(1, h.cols);
  for (int i = 0; i < h.rows; ++i) {
    for (int j = 0; j < h.cols; ++j) out.at(0, j) += h.at(i, j);
  }
  if (h.rows > 0) {
    for (double& v : out.d) v /= h.rows;
  }
  return out;
}

void mean_pool_forward(const Tensor2& stack, int n, const std::vector<double>& divisors,
                       Tensor2& out) {
  const int B = static_cast<int>(divisors.size());
  out.ensure_zero(B, stack.cols);
  for (int b = 0; b < B; ++b) {
    for (int r = 0; r < n; ++r) {
      const double* row = stack.d.data() + static_cast<std::size_t>(b * n + r) * stack.cols;
      double* orow = out.d.data() + static_cast<std::size_t>(b) * stack.cols;
      for (int j = 0; j < stack.cols; ++j) orow[j] += row[j];
    }
    const double div = divisors[static_cast<std::size_t>(b)];
    if (div > 0) {
      double* orow = out.d.data() + static_cast<std::size_t>(b) * stack.cols;
      for (int j = 0; j < stack.cols; ++j) orow[j] /= div;
    }
  }
}

void mean_pool_backward(const Tensor2& dout, int n, const std::vector<double>& divisors,
                        Tensor2& dstack) {
  const int B = dout.rows;
  dstack.ensure(B * n, dout.cols);
  for (int b = 0; b < B; ++b) {
    const double div = divisors[static_cast<std::size_t>(b)];
    const double scale = div > 0 ? 1.0 / div : 0.0;
    const double* drow = dout.d.data() + static_cast<std::size_t>(b) * dout.cols;
    for (int r = 0; r < n; ++r) {
      double* row = dstack.d.data() + static_cast<std::size_t>(b * n + r) * dout.cols;
      for (int j = 0; j < dout.cols; ++j) row[j] = drow[j] * scale;
    }
  }
}

// ---------------------------------------------------------------------------
// Dropout, linear, losses
// ---------------------------------------------------------------------------

void dropout_forward(const Tensor2& in, double p, bool train, Rng* rng, Tensor2& out,
                     Tensor2* mask) {
  if (p < 0.0 || p >= 1.0) throw UsageError("dropout: p must be in [0, 1)");
  out.ensure(in.rows, in.cols);
  if (!train || p == 0.0) {
    out = in;
    if (mask) {
      mask->ensure(in.rows, in.cols);
      std::fill(mask->d.begin(), mask->d.end(), 1.0);
    }
    return;
  }
  if (!rng) throw UsageError("dropout: training mode needs an rng");
  const double keep_scale = 1.0 / (1.0 - p);
  if (mask) mask->ensure(in.rows, in.cols);
  for (std::size_t i = 0; i < in.d.size(); ++i) {
    const double m = rng->uniform01() >= p ? keep_scale : 0.0;
    if (mask) mask->d[i] = m;
    out.d[i] = in.d[i] * m;
  }
}

void dropout_backward(const Tensor2& dout, const Tensor2& mask, Tensor2& din) {
  din.ensure(dout.rows, dout.cols);
  for (std::size_t i = 0; i < dout.d.size(); ++i) din.d[i] = dout.d[i] * mask.d[i];
}

Linear::Linear(const std::string& prefix, int in_dim, int out_dim, bool head)
    : W(prefix + ".W", in_dim, out_dim, head), b(prefix + ".b", 1, out_dim, head) {}

void Linear::init(Rng& rng) { xavier_uniform(W.value, rng); }

void Linear::collect(std::vector<Param*>& out) {
  out.push_back(&W);
  out.push_back(&b);
}

void Linear::forward(const Tensor2& x, Tensor2& y, Cache& cache) const {
  if (x.cols != W.value.rows) throw UsageError("linear: shape mismatch");
  cache.x = x;
  mm_nn(x, W.value, y);
  add_row_vector(y, b.value);
}

void Linear::backward(const Cache& cache, const Tensor2& dy, Tensor2* dx) {
  mm_tn(cache.x, dy, W.grad, true);
  col_sums(dy, b.grad, true);
  if (dx) mm_nt(dy, W.value, *dx);
}

double softmax_xent(const Tensor2& logits, const std::vector<int>& y, Tensor2* probs,
                    Tensor2* dlogits) {
  const int B = logits.rows, C = logits.cols;
  if (static_cast<int>(y.size()) != B) throw UsageError("softmax_xent: label count mismatch");
  Tensor2 local;
  Tensor2& p = probs ? *probs : local;
  p.ensure(B, C);
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    if (y[static_cast<std::size_t>(b)] < 0 || y[static_cast<std::size_t>(b)] >= C) {
      throw UsageError("softmax_xent: class index out of range");
    }
    double mx = logits.at(b, 0);
    for (int c = 1; c < C; ++c) mx = std::max(mx, logits.at(b, c));
    double z = 0.0;
    for (int c = 0; c < C; ++c) z += std::exp(logits.at(b, c) - mx);
    const double log_z = std::log(z) + mx;
    for (int c = 0; c < C; ++c) p.at(b, c) = std::exp(logits.at(b, c) - log_z);
    loss -= logits.at(b, y[static_cast<std::size_t>(b)]) - log_z;
  }
  loss /= B;
  if (dlogits) {
    dlogits->ensure(B, C);
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < C; ++c) {
        dlogits->at(b, c) =
            (p.at(b, c) - (c == y[static_cast<std::size_t>(b)] ? 1.0 : 0.0)) / B;
      }
    }
  }
  return loss;
}

double multiclass_hinge(const Tensor2& scores, const std::vector<int>& y, Tensor2* dscores) {
  const int B = scores.rows, C = scores.cols;
  if (static_cast<int>(y.size()) != B) throw UsageError("hinge: label count mismatch");
  if (dscores) dscores->ensure_zero(B, C);
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const int yb = y[static_cast<std::size_t>(b)];
    const double sy = scores.at(b, yb);
    for (int c = 0; c < C; ++c) {
      if (c == yb) continue;
      const double margin = 1.0 - sy + scores.at(b, c);
      if (margin > 0.0) {
        loss += margin / C;
        if (dscores) {
          dscores->at(b, c) += 1.0 / (C * B);
          dscores->at(b, yb) -= 1.0 / (C * B);
        }
      }
    }
  }
  return loss / B;
}

double mse_loss(const Tensor2& pred, const std::vector<double>& y, Tensor2* dpred) {
  const int B = pred.rows;
  if (pred.cols != 1 || static_cast<int>(y.size()) != B) {
    throw UsageError("mse_loss: shape mismatch");
  }
  double loss = 0.0;
  if (dpred) dpred->ensure(B, 1);
  for (int b = 0; b < B; ++b) {
    const double r = pred.at(b, 0) - y[static_cast<std::size_t>(b)];
    loss += r * r;
    if (dpred) dpred->at(b, 0) = 2.0 * r / B;
  }
  return loss / B;
}

// ---------------------------------------------------------------------------
// Optimizer and gradient check
// ---------------------------------------------------------------------------

Optimizer::Optimizer(std::vector<Param*> params, OptimizerConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.kind == OptimizerConfig::Kind::kAdam) {
    for (Param* p : params_) {
      m_.emplace_back(p->value.rows, p->value.cols);
      v_.emplace_back(p->value.rows, p->value.cols);
    }
  }
}

void Optimizer::step() {
  ++t_;
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Param& p = *params_[pi];
    if (p.head && cfg_.l2_head > 0.0) {
      for (std::size_t i = 0; i < p.grad.d.size(); ++i) {
        p.grad.d[i] += cfg_.l2_head * p.value.d[i];
      }
    }
    if (cfg_.kind == OptimizerConfig::Kind::kSgd) {
      for (std::size_t i = 0; i < p.value.d.size(); ++i) {
        p.value.d[i] -= cfg_.lr * p.grad.d[i];
      }
      continue;
    }
    Tensor2& m = m_[pi];
    Tensor2& v = v_[pi];
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.value.d.size(); ++i) {
      const double g = p.grad.d[i];
      m.d[i] = cfg_.beta1 * m.d[i] + (1.0 - cfg_.beta1) * g;
      v.d[i] = cfg_.beta2 * v.d[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m.d[i] / bc1;
      const double vhat = v.d[i] / bc2;
      p.value.d[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double grad_check(GradCheckable& model, double h) {
  model.check_grads();
  const std::vector<Param*> params = model.check_params();
  std::vector<Tensor2> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.value.d.size(); ++i) {
      const double saved = p.value.d[i];
      p.value.d[i] = saved + h;
      const long double lp = model.check_loss();
      p.value.d[i] = saved - h;
      const long double lm = model.check_loss();
      p.value.d[i] = saved;
      if (!std::isfinite(static_cast<double>(lp)) || !std::isfinite(static_cast<double>(lm))) {
        throw NumericError("grad_check: non-finite loss at " + p.name);
      }
      const double gn = static_cast<double>((lp - lm) / (2.0L * h));
      const double ga = analytic[pi].d[i];
      const double rel = std::abs(ga - gn) / std::max({std::abs(ga), std::abs(gn), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace ag
