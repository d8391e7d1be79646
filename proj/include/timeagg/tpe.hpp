#pragma once

#include <functional>
#include <vector>

#include "timeagg/model.hpp"
#include "timeagg/rng.hpp"

namespace timeagg {

/// Hyperparameter search space. Unit counts and conv kernel are categorical
/// grids; l1/l2 are log-uniform; dropout is uniform.
struct SearchSpace {
  std::vector<int> unit_choices = {4, 8, 16, 32, 64};
  double l1_min = 1e-6, l1_max = 1e-1;
  double l2_min = 1e-6, l2_max = 1e-1;
  double dropout_min = 0.0, dropout_max = 0.5;
  std::vector<int> kernel_choices = {2, 3};
  bool tune_conv_kernel = false;

  void validate() const;
};

struct Trial {
  HyperParams hp;
  double objective = 0.0;  // +inf when failed
  std::uint64_t seed = 0;
  bool complete = false;
};

struct TpeConfig {
  double gamma = 0.25;        // good/bad split quantile
  int n_startup = 10;         // uniform sampling until this many completed trials
  int n_candidates = 24;      // candidates drawn from the good density
  double bandwidth_floor = 1e-3;
};

/// One TPE proposal: below n_startup completed trials, sample uniformly;
/// otherwise fit per-dimension good/bad densities (Gaussian KDE with Scott's
/// bandwidth for continuous dims, Laplace-smoothed masses for categorical)
/// and return the candidate maximizing the density ratio.
HyperParams suggest(const std::vector<Trial>& history, const SearchSpace& space,
                    Rng& rng, const TpeConfig& cfg = {});

using Objective = std::function<double(const HyperParams&, std::uint64_t trial_seed)>;

struct StudyResult {
  Trial best;
  std::vector<Trial> trials;
};

/// Sequential study: suggest, evaluate, record. Trial i trains with seed
/// (study seed + i). Failed trials keep objective +inf and are excluded from
/// density fitting. Throws NumericError when every trial failed.
StudyResult run_study(const Objective& objective, const SearchSpace& space,
                      int n_trials, std::uint64_t seed, const TpeConfig& cfg = {});

/// Study over real training: objective is the checkpointed validation BCE.
StudyResult tune_architecture(ArchKind kind, const GridSet& train_set,
                              const GridSet& val_set, int n_trials,
                              std::uint64_t seed, TrainConfig base_cfg = {},
                              SearchSpace space = {});

}  // namespace timeagg
