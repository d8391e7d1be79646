#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "timeagg/rng.hpp"

namespace timeagg::nn {

using Matrix = Eigen::MatrixXd;

/// A minibatch of windowed sequences: one n x f matrix per time step.
using Sequence = std::vector<Matrix>;

/// Layers pass either a flat batch or a sequence batch.
struct Value {
  std::variant<Matrix, Sequence> payload;

  Value() = default;
  Value(Matrix m) : payload(std::move(m)) {}
  Value(Sequence s) : payload(std::move(s)) {}

  bool is_sequence() const { return std::holds_alternative<Sequence>(payload); }
  Matrix& mat() { return std::get<Matrix>(payload); }
  const Matrix& mat() const { return std::get<Matrix>(payload); }
  Sequence& seq() { return std::get<Sequence>(payload); }
  const Sequence& seq() const { return std::get<Sequence>(payload); }
};

enum class Mode { Train, Eval };
enum class Activation { Linear, Relu };
enum class ConvPadding { Valid, Causal };

struct ParamRef {
  std::string name;
  Matrix* value;
  Matrix* grad;
  bool is_weight;  // weights are L1/L2 regularized, biases are not
};

class Layer {
 public:
  virtual ~Layer() = default;
  /// Forward pass; caches what backward needs. rng drives dropout only.
  virtual Value forward(const Value& x, Mode mode, Rng* rng) = 0;
  /// Backward pass; accumulates parameter gradients, returns input gradient.
  virtual Value backward(const Value& grad_out) = 0;
  virtual void init(Rng& /*rng*/) {}
  virtual void collect_params(std::vector<ParamRef>& /*out*/) {}
  virtual long param_count() const { return 0; }
  virtual bool has_params() const { return false; }
  virtual std::string describe() const = 0;
};

/// y = x W + b, optional ReLU.
class Dense : public Layer {
 public:
  Dense(std::string name, int in, int out, Activation act);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(std::vector<ParamRef>& out) override;
  long param_count() const override;
  bool has_params() const override { return true; }
  std::string describe() const override;

  Matrix weight, bias;       // in x out, 1 x out
  Matrix grad_weight, grad_bias;

 private:
  std::string name_;
  Activation act_;
  Matrix x_, z_;  // cached input and pre-activation
};

/// One shared dense transform applied independently to every time step.
class TimeDistributedDense : public Layer {
 public:
  TimeDistributedDense(std::string name, int in, int out, Activation act);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(std::vector<ParamRef>& out) override;
  long param_count() const override;
  bool has_params() const override { return true; }
  std::string describe() const override;

  Matrix weight, bias;
  Matrix grad_weight, grad_bias;

 private:
  std::string name_;
  Activation act_;
  Sequence x_, z_;
};

/// 1-D convolution over the window axis. Valid: output length W-k+1.
/// Causal: left-pad k-1 zero frames, output length W, y[t] reads only x[<=t].
class Conv1D : public Layer {
 public:
  Conv1D(std::string name, int in, int out, int kernel, ConvPadding padding,
         Activation act);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(std::vector<ParamRef>& out) override;
  long param_count() const override;
  bool has_params() const override { return true; }
  std::string describe() const override;

  std::vector<Matrix> kernel;  // k taps, each in x out
  Matrix bias;
  std::vector<Matrix> grad_kernel;
  Matrix grad_bias;
  ConvPadding padding() const { return padding_; }
  int kernel_size() const { return static_cast<int>(kernel.size()); }

 private:
  std::string name_;
  int in_, out_;
  ConvPadding padding_;
  Activation act_;
  Sequence x_, z_;
};

/// GRU returning the final hidden state. h0 = 0.
///   z_t = sigmoid(x Wz + h Uz + bz)
///   r_t = sigmoid(x Wr + h Ur + br)
///   g_t = tanh(x Wh + (r ⊙ h) Uh + bh)
///   h_t = (1 - z_t) ⊙ h_{t-1} + z_t ⊙ g_t
class Gru : public Layer {
 public:
  Gru(std::string name, int in, int units);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(std::vector<ParamRef>& out) override;
  long param_count() const override;
  bool has_params() const override { return true; }
  std::string describe() const override;

  Matrix wz, wr, wh;  // in x u
  Matrix uz, ur, uh;  // u x u
  Matrix bz, br, bh;  // 1 x u
  Matrix gwz, gwr, gwh, guz, gur, guh, gbz, gbr, gbh;

 private:
  std::string name_;
  int in_, units_;
  Sequence x_;
  std::vector<Matrix> h_prev_, z_, r_, g_, rh_;
};

/// Four-gate LSTM returning the final hidden state. Forget bias starts at 1.
class Lstm : public Layer {
 public:
  Lstm(std::string name, int in, int units);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  void init(Rng& rng) override;
  void collect_params(std::vector<ParamRef>& out) override;
  long param_count() const override;
  bool has_params() const override { return true; }
  std::string describe() const override;

  Matrix wi, wf, wg, wo;
  Matrix ui, uf, ug, uo;
  Matrix bi, bf, bg, bo;
  Matrix gwi, gwf, gwg, gwo, gui, guf, gug, guo, gbi, gbf, gbg, gbo;

 private:
  std::string name_;
  int in_, units_;
  Sequence x_;
  std::vector<Matrix> h_prev_, c_prev_, i_, f_, g_, o_, c_, tanh_c_;
};

/// Inverted dropout: zero with probability rate, scale survivors by 1/(1-rate).
/// Eval mode is the exact identity. Works on both value kinds.
class Dropout : public Layer {
 public:
  Dropout(std::string name, double rate);
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  std::string describe() const override;
  double rate() const { return rate_; }

 private:
  std::string name_;
  double rate_;
  bool active_ = false;
  std::vector<Matrix> masks_;  // one per step (single entry for flat input)
  bool was_sequence_ = false;
};

/// Sequence [n x f] * W  ->  matrix n x (W*f), window-major.
class Flatten : public Layer {
 public:
  Flatten() = default;
  Value forward(const Value& x, Mode mode, Rng* rng) override;
  Value backward(const Value& grad_out) override;
  std::string describe() const override { return "flatten"; }

 private:
  int steps_ = 0, width_ = 0;
};

/// An ordered layer stack ending in a single-logit dense output.
class Stack {
 public:
  void add(std::unique_ptr<Layer> layer);
  /// Index of the layer whose (matrix) output is the patient representation.
  void set_representation_tap(int layer_index) { tap_ = layer_index; }

  Matrix forward(const Sequence& x, Mode mode, Rng* dropout_rng = nullptr);
  void backward(const Matrix& grad_logits);
  std::vector<ParamRef> params();
  void zero_grads();
  long param_count() const;
  int parameterized_layers() const;
  const Matrix& representation() const { return representation_; }
  int size() const { return static_cast<int>(layers_.size()); }
  Layer& layer(int i) { return *layers_.at(i); }
  const Layer& layer(int i) const { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  int tap_ = -1;
  Matrix representation_;
};

/// Numerically stable elementwise sigmoid.
Matrix sigmoid(const Matrix& z);

struct BceResult {
  double total = 0.0;    // data + penalty
  double data = 0.0;     // mean binary cross entropy on clamped probabilities
  double penalty = 0.0;  // l1 * sum|W| + l2 * sum W^2 over weight matrices
  Matrix grad_logits;    // (p - y) / batch
};

/// Binary cross entropy over sigmoid(logits), probabilities clamped to
/// [1e-7, 1-1e-7], plus L1/L2 weight penalties.
BceResult bce_with_logits(const Matrix& logits, const std::vector<int>& labels,
                          double l1, double l2,
                          const std::vector<ParamRef>& params);

/// d(penalty)/dW added onto the existing weight gradients.
void add_penalty_gradients(double l1, double l2,
                           const std::vector<ParamRef>& params);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

/// Textbook Adam with bias correction; state laid out per parameter.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<ParamRef>& params);
  long timestep() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

// Seeded initializers.
void glorot_uniform(Matrix& w, double fan_in, double fan_out, Rng& rng);
void orthogonal(Matrix& w, Rng& rng);

}  // namespace timeagg::nn
