#pragma once

#include <string>
#include <vector>

#include "timeagg/model.hpp"
#include "timeagg/tsne.hpp"

namespace timeagg {

/// (variable x window) map of relative auROC differences under per-cell
/// permutation, plus the raw per-round scores.
struct ImportanceHeatmap {
  std::vector<std::string> variables;
  int windows = 0;
  int rounds = 0;
  double baseline_auroc = 0.0;
  Eigen::MatrixXd relative_difference;            // F x W
  Eigen::MatrixXd mean_permuted_auroc;            // F x W
  std::vector<Eigen::MatrixXd> per_round_auroc;   // rounds entries, each F x W
  std::vector<std::string> notes;                 // replacement-pool fallbacks
};

/// Longitudinal permutation importance: per (variable, window), replace the
/// cell for every test patient with a draw from the training cohort's
/// observed values at the same (variable, window), re-predict, score auROC;
/// report relative_difference(mean over rounds, baseline). Inputs are never
/// mutated; each (variable, window, round) uses its own RNG substream.
ImportanceHeatmap permutation_importance(const TrainedModel& model,
                                         const GridSet& test_set,
                                         const GridSet& train_set, int rounds = 20,
                                         std::uint64_t seed = 0);

struct EmbeddingPlot {
  std::vector<std::string> patient_ids;
  Eigen::MatrixXd points;  // n x 2
  std::vector<int> outcome;
  std::string cohort_tag;
};

/// Final dense representations -> exact t-SNE -> outcome-tagged scatter data.
EmbeddingPlot confusion_plot(const TrainedModel& model, const GridSet& set,
                             const std::string& cohort_tag,
                             const TsneConfig& cfg = {});

}  // namespace timeagg
