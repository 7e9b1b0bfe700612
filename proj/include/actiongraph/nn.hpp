#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actiongraph/graph.hpp"
#include "actiongraph/rng.hpp"
#include "actiongraph/tensor.hpp"

namespace ag {

/// Named trainable tensor with its gradient buffer. `head` marks classifier
/// parameters that receive the L2 penalty.
struct Param {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
  bool head = false;

  Param() = default;
  Param(std::string n, int r, int c, bool is_head = false)
      : name(std::move(n)), value(r, c), grad(r, c), head(is_head) {}
};

/// Xavier uniform with gain 1 by default; biases stay zero-initialized.
void xavier_uniform(Tensor2& w, Rng& rng, double gain = 1.0);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// One LSTM layer. Gate weights act on the concatenation [h_prev, x], shape
/// (hidden+input) x hidden, matching
///   f = sigmoid(W_f [h, x] + b_f), i = sigmoid(W_i [h, x] + b_i),
///   c = f*c_prev + i*tanh(W_c [h, x] + b_c),
///   o = sigmoid(W_o [h, x] + b_o), h = o*tanh(c).
struct LstmLayer {
  int input = 0;
  int hidden = 0;
  Param Wf, Wi, Wc, Wo, bf, bi, bc, bo;

  LstmLayer() = default;
  LstmLayer(const std::string& prefix, int input_dim, int hidden_dim);
  void init(Rng& rng);
  void collect(std::vector<Param*>& out);
};

struct LstmStepCache {
  Tensor2 z;  // B x (hidden+input), [h_prev | x]
  Tensor2 f, i, g, o;
  Tensor2 c_prev, c, tanh_c;
};

void lstm_step(const LstmLayer& layer, const Tensor2& x, const Tensor2& h_prev,
               const Tensor2& c_prev, Tensor2& h_out, Tensor2& c_out,
               LstmStepCache* cache = nullptr);

/// Exact gradients w.r.t. params (accumulated into layer grads), the step
/// input, and the previous hidden/cell states.
void lstm_step_backward(LstmLayer& layer, const LstmStepCache& cache, const Tensor2& dh,
                        const Tensor2& dc, Tensor2& dx, Tensor2& dh_prev, Tensor2& dc_prev);

/// Stack of LSTM layers run over a sequence, with inverted dropout between
/// layers in training mode. Returns the top layer's last hidden state.
struct LstmStack {
  std::vector<LstmLayer> layers;
  double dropout_p = 0.5;

  struct Cache {
    int steps = 0;
    int batch = 0;
    bool train = false;
    std::vector<std::vector<LstmStepCache>> step_caches;  // [layer][t]
    std::vector<std::vector<Tensor2>> layer_inputs;       // [layer][t], post-dropout
    std::vector<std::vector<Tensor2>> masks;              // [layer-1][t]
    std::vector<std::vector<Tensor2>> h, c;               // [layer][t]
  };

  LstmStack() = default;
  LstmStack(const std::string& prefix, int input_dim, int hidden_dim, int n_layers);
  void init(Rng& rng);
  void collect(std::vector<Param*>& out);
  int hidden() const { return layers.empty() ? 0 : layers.back().hidden; }

  Tensor2 forward(const std::vector<Tensor2>& xs, bool train, Rng* dropout_rng,
                  Cache& cache) const;
  /// dh_last feeds the returned hidden state; when dxs is non-null it receives
  /// gradients w.r.t. each input step.
  void backward(const Cache& cache, const Tensor2& dh_last, std::vector<Tensor2>* dxs);
};

// ---------------------------------------------------------------------------
// GCN
// ---------------------------------------------------------------------------

/// Directed-graph convolution H' = act(Aᵀ H W): the message into node i sums
/// over in-neighbors j with weight w_ji. No symmetric normalization and no
/// bias. `relu=false` switches to the identity activation (test hook).
struct GcnLayer {
  int in = 0;
  int out = 0;
  bool relu = true;
  Param W;

  struct Cache {
    int n = 0;
    int batch = 0;
    std::vector<const ActionGraph*> graphs;
    Tensor2 msg;  // (B*n) x in
    Tensor2 pre;  // (B*n) x out
  };

  GcnLayer() = default;
  GcnLayer(const std::string& prefix, int in_dim, int out_dim);
  void init(Rng& rng);
  void collect(std::vector<Param*>& out);

  /// h_stack: per-sample n x in blocks stacked into (B*n) x in.
  void forward(const std::vector<const ActionGraph*>& graphs, const Tensor2& h_stack,
               Tensor2& out_stack, Cache& cache) const;
  void backward(const Cache& cache, const Tensor2& dout_stack, Tensor2& dh_stack);
};

/// Mean over the rows of H (the graph-embedding readout).
Tensor2 mean_pool_rows(const Tensor2& h);

/// Block version: stacked (B*n) x d -> B x d, dividing block b by divisors[b].
void mean_pool_forward(const Tensor2& stack, int n, const std::vector<double>& divisors,
                       Tensor2& out);
void mean_pool_backward(const Tensor2& dout, int n, const std::vector<double>& divisors,
                        Tensor2& dstack);

// ---------------------------------------------------------------------------
// Dropout, linear head, losses
// ---------------------------------------------------------------------------

/// Inverted dropout: train mode multiplies by Bernoulli(1-p) masks scaled by
/// 1/(1-p); eval mode is the identity.
void dropout_forward(const Tensor2& in, double p, bool train, Rng* rng, Tensor2& out,
                     Tensor2* mask);
void dropout_backward(const Tensor2& dout, const Tensor2& mask, Tensor2& din);

struct Linear {
  Param W, b;

  struct Cache {
    Tensor2 x;
  };

  Linear() = default;
  Linear(const std::string& prefix, int in_dim, int out_dim, bool head);
  void init(Rng& rng);
  void collect(std::vector<Param*>& out);
  void forward(const Tensor2& x, Tensor2& y, Cache& cache) const;
  void backward(const Cache& cache, const Tensor2& dy, Tensor2* dx);
};

/// Numerically stable softmax cross-entropy; returns the batch-mean loss.
double softmax_xent(const Tensor2& logits, const std::vector<int>& y, Tensor2* probs,
                    Tensor2* dlogits);

/// Multi-class hinge (1/C) * sum_{j != y} max(0, 1 - s_y + s_j), batch mean.
/// The subgradient at the kink is 0.
double multiclass_hinge(const Tensor2& scores, const std::vector<int>& y, Tensor2* dscores);

/// Mean squared error over a B x 1 prediction column.
double mse_loss(const Tensor2& pred, const std::vector<double>& y, Tensor2* dpred);

// ---------------------------------------------------------------------------
// Optimizer and gradient checking
// ---------------------------------------------------------------------------

struct OptimizerConfig {
  enum class Kind { kAdam, kSgd };
  Kind kind = Kind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2_head = 1e-3;  // added to head-param gradients
};

class Optimizer {
 public:
  Optimizer(std::vector<Param*> params, OptimizerConfig cfg);
  void step();

 private:
  std::vector<Param*> params_;
  OptimizerConfig cfg_;
  std::vector<Tensor2> m_, v_;
  long t_ = 0;
};

/// Anything exposing parameters plus a deterministic loss/gradient pair on a
/// bound batch (dropout disabled) can be finite-difference checked. The loss
/// for the numeric side is evaluated in long double: with h = 1e-5, plain
/// double evaluation leaves cancellation noise of about 1e-11 per difference,
/// which swamps parameters whose true gradient sits near the 1e-8 floor of
/// the error formula.
struct GradCheckable {
  virtual ~GradCheckable() = default;
  virtual std::vector<Param*> check_params() = 0;
  virtual long double check_loss() = 0;
  virtual void check_grads() = 0;  // zero grads, forward, backward
};

/// Central differences with step h over every parameter; returns the max
/// relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8). Throws NumericError
/// on a non-finite loss.
double grad_check(GradCheckable& model, double h = 1e-5);

}  // namespace ag
