#include "timeagg/model.hpp"

#include <cmath>
#include <numeric>

#include "timeagg/errors.hpp"

namespace timeagg {

using nn::Matrix;
using nn::Mode;
using nn::Sequence;

const std::vector<ArchKind>& all_arch_kinds() {
  static const std::vector<ArchKind> kinds = {
      ArchKind::Dense,    ArchKind::TddDense,    ArchKind::TddGru,
      ArchKind::TddLstm,  ArchKind::TddCnnValid, ArchKind::TddCnnCausal};
  return kinds;
}

std::string to_string(ArchKind kind) {
  switch (kind) {
    case ArchKind::Dense: return "dense";
    case ArchKind::TddDense: return "tdd_dense";
    case ArchKind::TddGru: return "tdd_gru";
    case ArchKind::TddLstm: return "tdd_lstm";
    case ArchKind::TddCnnValid: return "tdd_cnn_valid";
    case ArchKind::TddCnnCausal: return "tdd_cnn_causal";
  }
  throw DataError("unknown architecture kind");
}

ArchKind arch_from_string(const std::string& name) {
  for (ArchKind k : all_arch_kinds()) {
    if (to_string(k) == name) return k;
  }
  throw DataError("unknown architecture '" + name + "'");
}

void HyperParams::validate() const {
  if (units_input < 1 || units_agg < 1 || units_dense < 1) {
    throw DataError("hyperparams: unit counts must be positive");
  }
  if (l1 < 0.0 || l2 < 0.0) throw DataError("hyperparams: penalties must be >= 0");
  if (dropout < 0.0 || dropout > 0.9) {
    throw DataError("hyperparams: dropout must be in [0, 0.9]");
  }
  if (conv_kernel < 1) throw DataError("hyperparams: conv kernel must be >= 1");
}

nn::Stack build_network(ArchKind kind, const HyperParams& hp, int features,
                        int windows, std::uint64_t init_seed) {
  hp.validate();
  if (features < 1 || windows < 1) throw DataError("build_network: empty input shape");
  if ((kind == ArchKind::TddCnnValid) && hp.conv_kernel > windows) {
    throw DataError("build_network: valid conv kernel exceeds window count");
  }

  using namespace nn;
  Stack stack;
  auto dense = [](std::string name, int in, int out, Activation act) {
    return std::make_unique<Dense>(std::move(name), in, out, act);
  };

  switch (kind) {
    case ArchKind::Dense: {
      stack.add(std::make_unique<Flatten>());
      stack.add(dense("input", windows * features, hp.units_input, Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_input", hp.dropout));
      stack.add(dense("agg", hp.units_input, hp.units_agg, Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_agg", hp.dropout));
      stack.add(dense("hidden", hp.units_agg, hp.units_dense, Activation::Relu));
      stack.set_representation_tap(5);
      stack.add(dense("output", hp.units_dense, 1, Activation::Linear));
      break;
    }
    case ArchKind::TddDense: {
      stack.add(std::make_unique<TimeDistributedDense>("input", features, hp.units_input,
                                                       Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_input", hp.dropout));
      stack.add(std::make_unique<Flatten>());
      stack.add(dense("agg", windows * hp.units_input, hp.units_agg, Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_agg", hp.dropout));
      stack.add(dense("hidden", hp.units_agg, hp.units_dense, Activation::Relu));
      stack.set_representation_tap(5);
      stack.add(dense("output", hp.units_dense, 1, Activation::Linear));
      break;
    }
    case ArchKind::TddGru:
    case ArchKind::TddLstm: {
      stack.add(std::make_unique<TimeDistributedDense>("input", features, hp.units_input,
                                                       Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_input", hp.dropout));
      if (kind == ArchKind::TddGru) {
        stack.add(std::make_unique<Gru>("agg", hp.units_input, hp.units_agg));
      } else {
        stack.add(std::make_unique<Lstm>("agg", hp.units_input, hp.units_agg));
      }
      stack.add(std::make_unique<Dropout>("drop_agg", hp.dropout));
      stack.add(dense("hidden", hp.units_agg, hp.units_dense, Activation::Relu));
      stack.set_representation_tap(4);
      stack.add(dense("output", hp.units_dense, 1, Activation::Linear));
      break;
    }
    case ArchKind::TddCnnValid:
    case ArchKind::TddCnnCausal: {
      const ConvPadding pad = kind == ArchKind::TddCnnValid ? ConvPadding::Valid
                                                            : ConvPadding::Causal;
      const int conv_steps =
          pad == ConvPadding::Valid ? windows - hp.conv_kernel + 1 : windows;
      stack.add(std::make_unique<TimeDistributedDense>("input", features, hp.units_input,
                                                       Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_input", hp.dropout));
      stack.add(std::make_unique<Conv1D>("agg", hp.units_input, hp.units_agg,
                                         hp.conv_kernel, pad, Activation::Relu));
      stack.add(std::make_unique<Dropout>("drop_agg", hp.dropout));
      stack.add(std::make_unique<Flatten>());
      stack.add(dense("hidden", conv_steps * hp.units_agg, hp.units_dense, Activation::Relu));
      stack.set_representation_tap(5);
      stack.add(dense("output", hp.units_dense, 1, Activation::Linear));
      break;
    }
  }

  Rng init_rng(init_seed);
  for (int i = 0; i < stack.size(); ++i) stack.layer(i).init(init_rng);
  return stack;
}

Sequence to_sequence(const GridSet& set, const std::vector<int>& rows) {
  const int W = set.window_cfg.n_windows;
  const int F = set.schema.size();
  Sequence seq(W, Matrix(rows.size(), F));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& g = set.grids.at(rows[i]);
    for (int w = 0; w < W; ++w) seq[w].row(i) = g.values.row(w);
  }
  return seq;
}

Sequence to_sequence(const GridSet& set) {
  std::vector<int> rows(set.size());
  std::iota(rows.begin(), rows.end(), 0);
  return to_sequence(set, rows);
}

namespace {

std::vector<Matrix> snapshot(const std::vector<nn::ParamRef>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(*p.value);
  return out;
}

double validation_bce(nn::Stack& stack, const Sequence& x, const std::vector<int>& y) {
  const Matrix logits = stack.forward(x, Mode::Eval);
  return nn::bce_with_logits(logits, y, 0.0, 0.0, {}).data;
}

void check_schema(const TrainedModel& model, const GridSet& set) {
  if (!(model.schema == set.schema)) {
    throw DataError("model/grids schema mismatch");
  }
  if (model.window_cfg.n_windows != set.window_cfg.n_windows) {
    throw DataError("model/grids window count mismatch");
  }
}

}  // namespace

TrainedModel train(ArchKind kind, const HyperParams& hp, const GridSet& train_set,
                   const GridSet& val_set, const TrainConfig& cfg) {
  if (train_set.size() == 0 || val_set.size() == 0) {
    throw DataError("train: empty split");
  }
  if (cfg.batch_size < 1) throw DataError("train: batch_size must be >= 1");

  const int F = train_set.schema.size();
  const int W = train_set.window_cfg.n_windows;
  Rng run_rng(cfg.seed);
  Rng init_rng = run_rng.fork(1);
  Rng shuffle_rng = run_rng.fork(2);
  Rng dropout_rng = run_rng.fork(3);

  nn::Stack stack = build_network(kind, hp, F, W, init_rng.seed());
  auto params = stack.params();
  nn::Adam adam;

  const std::vector<int> train_labels = train_set.labels();
  const Sequence val_x = to_sequence(val_set);
  const std::vector<int> val_labels = val_set.labels();

  TrainedModel model;
  model.kind = kind;
  model.hp = hp;
  model.schema = train_set.schema;
  model.window_cfg = train_set.window_cfg;
  model.best_val_loss = std::numeric_limits<double>::infinity();

  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    long seen = 0;
    for (int start = 0; start < train_set.size(); start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, train_set.size() - start);
      std::vector<int> batch_rows(order.begin() + start, order.begin() + start + count);
      const Sequence x = to_sequence(train_set, batch_rows);
      std::vector<int> y(count);
      for (int i = 0; i < count; ++i) y[i] = train_labels[batch_rows[i]];

      stack.zero_grads();
      const Matrix logits = stack.forward(x, Mode::Train, &dropout_rng);
      const nn::BceResult loss = nn::bce_with_logits(logits, y, hp.l1, hp.l2, params);
      if (!std::isfinite(loss.total)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      stack.backward(loss.grad_logits);
      nn::add_penalty_gradients(hp.l1, hp.l2, params);
      adam.step(params);

      epoch_loss += loss.total * count;
      seen += count;
    }

    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(seen);
    stats.val_loss = validation_bce(stack, val_x, val_labels);
    if (!std::isfinite(stats.val_loss)) {
      throw NumericError("train: non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    model.history.push_back(stats);

    if (stats.val_loss < model.best_val_loss) {
      model.best_val_loss = stats.val_loss;
      model.best_epoch = epoch;
      model.weights = snapshot(params);
      if (model.weight_names.empty()) {
        for (const auto& p : params) model.weight_names.push_back(p.name);
      }
    }
  }
  return model;
}

nn::Stack instantiate(const TrainedModel& model) {
  nn::Stack stack = build_network(model.kind, model.hp, model.schema.size(),
                                  model.window_cfg.n_windows, /*init_seed=*/0);
  auto params = stack.params();
  if (params.size() != model.weights.size()) {
    throw DataError("model artifact: weight count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!model.weight_names.empty() && params[i].name != model.weight_names[i]) {
      throw DataError("model artifact: unexpected weight '" + model.weight_names[i] + "'");
    }
    if (params[i].value->rows() != model.weights[i].rows() ||
        params[i].value->cols() != model.weights[i].cols()) {
      throw DataError("model artifact: shape mismatch for '" + params[i].name + "'");
    }
    *params[i].value = model.weights[i];
  }
  return stack;
}

Eigen::VectorXd predict(const TrainedModel& model, const GridSet& set) {
  check_schema(model, set);
  nn::Stack stack = instantiate(model);
  const Matrix logits = stack.forward(to_sequence(set), Mode::Eval);
  return nn::sigmoid(logits).col(0);
}

nn::Matrix extract_representation(const TrainedModel& model, const GridSet& set) {
  check_schema(model, set);
  nn::Stack stack = instantiate(model);
  stack.forward(to_sequence(set), Mode::Eval);
  return stack.representation();
}

}  // namespace timeagg
