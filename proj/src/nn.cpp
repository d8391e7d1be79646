#include "timeagg/nn.hpp"

#include <cmath>

#include "timeagg/errors.hpp"

namespace timeagg::nn {

namespace {

void check_width(const std::string& who, long got, long want) {
  if (got != want) {
    throw DataError(who + ": input width " + std::to_string(got) + ", expected " +
                    std::to_string(want));
  }
}

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& grad, const Matrix& z) {
  return (z.array() > 0.0).select(grad, Matrix::Zero(grad.rows(), grad.cols()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, int in, int out, Activation act)
    : weight(Matrix::Zero(in, out)),
      bias(Matrix::Zero(1, out)),
      grad_weight(Matrix::Zero(in, out)),
      grad_bias(Matrix::Zero(1, out)),
      name_(std::move(name)),
      act_(act) {}

Value Dense::forward(const Value& x, Mode, Rng*) {
  check_width(name_, x.mat().cols(), weight.rows());
  x_ = x.mat();
  z_ = x_ * weight;
  z_.rowwise() += bias.row(0);
  return act_ == Activation::Relu ? relu(z_) : z_;
}

Value Dense::backward(const Value& grad_out) {
  const Matrix dz = act_ == Activation::Relu ? relu_backward(grad_out.mat(), z_)
                                             : grad_out.mat();
  grad_weight += x_.transpose() * dz;
  grad_bias += dz.colwise().sum();
  return Matrix(dz * weight.transpose());
}

void Dense::init(Rng& rng) {
  glorot_uniform(weight, static_cast<double>(weight.rows()),
                 static_cast<double>(weight.cols()), rng);
  bias.setZero();
}

void Dense::collect_params(std::vector<ParamRef>& out) {
  out.push_back({name_ + "/W", &weight, &grad_weight, true});
  out.push_back({name_ + "/b", &bias, &grad_bias, false});
}

long Dense::param_count() const { return weight.size() + bias.size(); }

std::string Dense::describe() const {
  return "dense(" + std::to_string(weight.rows()) + "->" + std::to_string(weight.cols()) +
         (act_ == Activation::Relu ? ", relu)" : ")");
}

// ---------------------------------------------------------------------------
// TimeDistributedDense

TimeDistributedDense::TimeDistributedDense(std::string name, int in, int out,
                                           Activation act)
    : weight(Matrix::Zero(in, out)),
      bias(Matrix::Zero(1, out)),
      grad_weight(Matrix::Zero(in, out)),
      grad_bias(Matrix::Zero(1, out)),
      name_(std::move(name)),
      act_(act) {}

Value TimeDistributedDense::forward(const Value& x, Mode, Rng*) {
  const Sequence& in = x.seq();
  x_ = in;
  z_.assign(in.size(), Matrix());
  Sequence out(in.size());
  for (std::size_t w = 0; w < in.size(); ++w) {
    check_width(name_, in[w].cols(), weight.rows());
    z_[w] = in[w] * weight;
    z_[w].rowwise() += bias.row(0);
    out[w] = act_ == Activation::Relu ? relu(z_[w]) : z_[w];
  }
  return out;
}

Value TimeDistributedDense::backward(const Value& grad_out) {
  const Sequence& dy = grad_out.seq();
  Sequence dx(dy.size());
  for (std::size_t w = 0; w < dy.size(); ++w) {
    const Matrix dz = act_ == Activation::Relu ? relu_backward(dy[w], z_[w]) : dy[w];
    grad_weight += x_[w].transpose() * dz;
    grad_bias += dz.colwise().sum();
    dx[w] = dz * weight.transpose();
  }
  return dx;
}

void TimeDistributedDense::init(Rng& rng) {
  glorot_uniform(weight, static_cast<double>(weight.rows()),
                 static_cast<double>(weight.cols()), rng);
  bias.setZero();
}

void TimeDistributedDense::collect_params(std::vector<ParamRef>& out) {
  out.push_back({name_ + "/W", &weight, &grad_weight, true});
  out.push_back({name_ + "/b", &bias, &grad_bias, false});
}

long TimeDistributedDense::param_count() const { return weight.size() + bias.size(); }

std::string TimeDistributedDense::describe() const {
  return "tdd(" + std::to_string(weight.rows()) + "->" + std::to_string(weight.cols()) +
         (act_ == Activation::Relu ? ", relu)" : ")");
}

// ---------------------------------------------------------------------------
// Conv1D

Conv1D::Conv1D(std::string name, int in, int out, int kernel_size, ConvPadding padding,
               Activation act)
    : bias(Matrix::Zero(1, out)),
      grad_bias(Matrix::Zero(1, out)),
      name_(std::move(name)),
      in_(in),
      out_(out),
      padding_(padding),
      act_(act) {
  if (kernel_size < 1) throw DataError(name_ + ": kernel size must be >= 1");
  kernel.assign(kernel_size, Matrix::Zero(in, out));
  grad_kernel.assign(kernel_size, Matrix::Zero(in, out));
}

Value Conv1D::forward(const Value& x, Mode, Rng*) {
  const Sequence& in = x.seq();
  const int steps = static_cast<int>(in.size());
  const int k = kernel_size();
  if (padding_ == ConvPadding::Valid && steps < k) {
    throw DataError(name_ + ": valid padding needs at least " + std::to_string(k) +
                    " windows, got " + std::to_string(steps));
  }
  for (const auto& m : in) check_width(name_, m.cols(), in_);
  x_ = in;

  const int out_steps = padding_ == ConvPadding::Valid ? steps - k + 1 : steps;
  const long n = in.empty() ? 0 : in[0].rows();
  z_.assign(out_steps, Matrix());
  Sequence out(out_steps);
  for (int t = 0; t < out_steps; ++t) {
    Matrix acc = Matrix::Zero(n, out_);
    for (int j = 0; j < k; ++j) {
      // valid: tap j reads x[t+j]; causal: tap j reads x[t-(k-1)+j]
      const int src = padding_ == ConvPadding::Valid ? t + j : t - (k - 1) + j;
      if (src < 0) continue;  // zero frame from causal left padding
      acc.noalias() += in[src] * kernel[j];
    }
    acc.rowwise() += bias.row(0);
    z_[t] = acc;
    out[t] = act_ == Activation::Relu ? relu(acc) : acc;
  }
  return out;
}

Value Conv1D::backward(const Value& grad_out) {
  const Sequence& dy = grad_out.seq();
  const int k = kernel_size();
  Sequence dx(x_.size());
  for (std::size_t w = 0; w < x_.size(); ++w) {
    dx[w] = Matrix::Zero(x_[w].rows(), x_[w].cols());
  }
  for (std::size_t t = 0; t < dy.size(); ++t) {
    const Matrix dz = act_ == Activation::Relu ? relu_backward(dy[t], z_[t]) : dy[t];
    grad_bias += dz.colwise().sum();
    for (int j = 0; j < k; ++j) {
      const int src = padding_ == ConvPadding::Valid ? static_cast<int>(t) + j
                                                     : static_cast<int>(t) - (k - 1) + j;
      if (src < 0) continue;
      grad_kernel[j].noalias() += x_[src].transpose() * dz;
      dx[src].noalias() += dz * kernel[j].transpose();
    }
  }
  return dx;
}

void Conv1D::init(Rng& rng) {
  const int k = kernel_size();
  for (auto& tap : kernel) {
    glorot_uniform(tap, static_cast<double>(k) * in_, static_cast<double>(k) * out_, rng);
  }
  bias.setZero();
}

void Conv1D::collect_params(std::vector<ParamRef>& out) {
  for (int j = 0; j < kernel_size(); ++j) {
    out.push_back({name_ + "/K" + std::to_string(j), &kernel[j], &grad_kernel[j], true});
  }
  out.push_back({name_ + "/b", &bias, &grad_bias, false});
}

long Conv1D::param_count() const {
  return static_cast<long>(kernel_size()) * in_ * out_ + bias.size();
}

std::string Conv1D::describe() const {
  return "conv1d(" + std::to_string(in_) + "->" + std::to_string(out_) +
         ", k=" + std::to_string(kernel_size()) +
         (padding_ == ConvPadding::Valid ? ", valid)" : ", causal)");
}

// ---------------------------------------------------------------------------
// Dropout

Dropout::Dropout(std::string name, double rate) : name_(std::move(name)), rate_(rate) {
  if (rate_ < 0.0 || rate_ >= 1.0) throw DataError(name_ + ": dropout rate must be in [0,1)");
}

Value Dropout::forward(const Value& x, Mode mode, Rng* rng) {
  active_ = mode == Mode::Train && rate_ > 0.0;
  was_sequence_ = x.is_sequence();
  if (!active_) return x;
  if (rng == nullptr) throw NumericError(name_ + ": train-mode dropout needs an RNG");

  const double keep = 1.0 - rate_;
  auto make_mask = [&](long rows, long cols) {
    Matrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        m(r, c) = rng->uniform() < rate_ ? 0.0 : 1.0 / keep;
      }
    }
    return m;
  };

  masks_.clear();
  if (was_sequence_) {
    Sequence out(x.seq().size());
    for (std::size_t w = 0; w < x.seq().size(); ++w) {
      masks_.push_back(make_mask(x.seq()[w].rows(), x.seq()[w].cols()));
      out[w] = x.seq()[w].cwiseProduct(masks_[w]);
    }
    return out;
  }
  masks_.push_back(make_mask(x.mat().rows(), x.mat().cols()));
  return Matrix(x.mat().cwiseProduct(masks_[0]));
}

Value Dropout::backward(const Value& grad_out) {
  if (!active_) return grad_out;
  if (was_sequence_) {
    Sequence dx(grad_out.seq().size());
    for (std::size_t w = 0; w < dx.size(); ++w) {
      dx[w] = grad_out.seq()[w].cwiseProduct(masks_[w]);
    }
    return dx;
  }
  return Matrix(grad_out.mat().cwiseProduct(masks_[0]));
}

std::string Dropout::describe() const {
  return "dropout(" + std::to_string(rate_) + ")";
}

// ---------------------------------------------------------------------------
// Flatten

Value Flatten::forward(const Value& x, Mode, Rng*) {
  const Sequence& in = x.seq();
  steps_ = static_cast<int>(in.size());
  width_ = steps_ > 0 ? static_cast<int>(in[0].cols()) : 0;
  const long n = steps_ > 0 ? in[0].rows() : 0;
  Matrix out(n, static_cast<long>(steps_) * width_);
  for (int w = 0; w < steps_; ++w) out.middleCols(w * width_, width_) = in[w];
  return out;
}

Value Flatten::backward(const Value& grad_out) {
  Sequence dx(steps_);
  for (int w = 0; w < steps_; ++w) dx[w] = grad_out.mat().middleCols(w * width_, width_);
  return dx;
}

// ---------------------------------------------------------------------------
// Stack

void Stack::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

Matrix Stack::forward(const Sequence& x, Mode mode, Rng* dropout_rng) {
  Value v = x;
  for (int i = 0; i < size(); ++i) {
    v = layers_[i]->forward(v, mode, dropout_rng);
    if (i == tap_) representation_ = v.mat();
  }
  return v.mat();
}

void Stack::backward(const Matrix& grad_logits) {
  Value g = grad_logits;
  for (int i = size() - 1; i >= 0; --i) g = layers_[i]->backward(g);
}

std::vector<ParamRef> Stack::params() {
  std::vector<ParamRef> out;
  for (auto& l : layers_) l->collect_params(out);
  return out;
}

void Stack::zero_grads() {
  for (auto& p : params()) p.grad->setZero();
}

long Stack::param_count() const {
  long total = 0;
  for (const auto& l : layers_) total += l->param_count();
  return total;
}

int Stack::parameterized_layers() const {
  int n = 0;
  for (const auto& l : layers_) n += l->has_params() ? 1 : 0;
  return n;
}

// ---------------------------------------------------------------------------
// Loss and optimizer

Matrix sigmoid(const Matrix& z) {
  Matrix p(z.rows(), z.cols());
  for (long i = 0; i < z.size(); ++i) {
    const double v = z(i);
    if (v >= 0.0) {
      p(i) = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      p(i) = e / (1.0 + e);
    }
  }
  return p;
}

BceResult bce_with_logits(const Matrix& logits, const std::vector<int>& labels,
                          double l1, double l2, const std::vector<ParamRef>& params) {
  const long n = logits.rows();
  if (n != static_cast<long>(labels.size()) || logits.cols() != 1) {
    throw DataError("bce: logits must be n x 1 aligned with labels");
  }
  BceResult res;
  res.grad_logits = Matrix::Zero(n, 1);
  const Matrix p = sigmoid(logits);
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("bce: labels must be 0 or 1");
    const double pi = std::clamp(p(i, 0), 1e-7, 1.0 - 1e-7);
    const double y = static_cast<double>(labels[i]);
    acc += -(y * std::log(pi) + (1.0 - y) * std::log(1.0 - pi));
    res.grad_logits(i, 0) = (pi - y) / static_cast<double>(n);
  }
  res.data = acc / static_cast<double>(n);
  res.penalty = 0.0;
  if (l1 > 0.0 || l2 > 0.0) {
    for (const auto& pr : params) {
      if (!pr.is_weight) continue;
      res.penalty += l1 * pr.value->cwiseAbs().sum() + l2 * pr.value->squaredNorm();
    }
  }
  res.total = res.data + res.penalty;
  return res;
}

void add_penalty_gradients(double l1, double l2, const std::vector<ParamRef>& params) {
  if (l1 <= 0.0 && l2 <= 0.0) return;
  for (const auto& pr : params) {
    if (!pr.is_weight) continue;
    *pr.grad += l1 * pr.value->unaryExpr([](double w) {
      return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
    });
    *pr.grad += 2.0 * l2 * *pr.value;
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (m_.size() != params.size()) throw NumericError("adam: parameter set changed");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = *params[i].grad;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m_[i] / c1;
    const Matrix v_hat = v_[i] / c2;
    params[i].value->array() -=
        cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
  }
}

// ---------------------------------------------------------------------------
// Initializers

void glorot_uniform(Matrix& w, double fan_in, double fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (long r = 0; r < w.rows(); ++r) {
    for (long c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  }
}

void orthogonal(Matrix& w, Rng& rng) {
  if (w.rows() != w.cols()) throw NumericError("orthogonal init needs a square matrix");
  Matrix a(w.rows(), w.cols());
  for (long r = 0; r < a.rows(); ++r) {
    for (long c = 0; c < a.cols(); ++c) a(r, c) = rng.normal();
  }
  const Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (long c = 0; c < q.cols(); ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  w = q;
}

}  // namespace timeagg::nn
