#pragma once

#include <optional>
#include <string>
#include <vector>

#include "timeagg/cohort.hpp"
#include "timeagg/nn.hpp"

namespace timeagg {

/// The six time-aggregation architectures. Shared skeleton: input layer,
/// aggregation layer, one dense layer, sigmoid output; dropout after the
/// input and aggregation layers.
enum class ArchKind { Dense, TddDense, TddGru, TddLstm, TddCnnValid, TddCnnCausal };

inline constexpr int kArchCount = 6;
const std::vector<ArchKind>& all_arch_kinds();
std::string to_string(ArchKind kind);
ArchKind arch_from_string(const std::string& name);

struct HyperParams {
  int units_input = 16;
  int units_agg = 16;
  int units_dense = 16;
  double l1 = 0.0;
  double l2 = 0.0;
  double dropout = 0.0;
  int conv_kernel = 2;  // conv kinds only

  void validate() const;
};

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;
};

struct EpochStats {
  double train_loss = 0.0;  // regularized loss, averaged over the epoch's batches
  double val_loss = 0.0;    // plain BCE on the validation split, eval mode
};

struct TrainedModel {
  ArchKind kind = ArchKind::Dense;
  HyperParams hp;
  Schema schema;
  WindowConfig window_cfg;
  StandardizationStats stats;
  std::vector<std::string> weight_names;   // params() order of the stack
  std::vector<nn::Matrix> weights;         // checkpoint at best validation loss
  std::vector<EpochStats> history;
  int best_epoch = 0;        // 1-based epoch of the checkpoint
  double best_val_loss = 0.0;
};

/// Assemble the layer stack for one architecture. The representation tap is
/// set on the dense layer immediately before the output unit.
nn::Stack build_network(ArchKind kind, const HyperParams& hp, int features,
                        int windows, std::uint64_t init_seed);

/// Minibatch Adam with per-epoch validation BCE and strict-improvement
/// checkpointing. Deterministic for fixed (data, kind, hp, cfg).
TrainedModel train(ArchKind kind, const HyperParams& hp, const GridSet& train_set,
                   const GridSet& val_set, const TrainConfig& cfg);

/// Probabilities in (0,1), dropout disabled. Validates the schema.
Eigen::VectorXd predict(const TrainedModel& model, const GridSet& set);

/// Post-activation output of the dense layer before the output unit (n x units_dense).
nn::Matrix extract_representation(const TrainedModel& model, const GridSet& set);

/// Rebuild the stack and load the checkpointed weights.
nn::Stack instantiate(const TrainedModel& model);

/// Convert grids to a sequence batch (one n x F matrix per window).
nn::Sequence to_sequence(const GridSet& set, const std::vector<int>& rows);
nn::Sequence to_sequence(const GridSet& set);

}  // namespace timeagg
