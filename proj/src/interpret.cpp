#include "timeagg/interpret.hpp"

#include "timeagg/errors.hpp"
#include "timeagg/metrics.hpp"

namespace timeagg {

using nn::Matrix;
using nn::Mode;
using nn::Sequence;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

ImportanceHeatmap permutation_importance(const TrainedModel& model,
                                         const GridSet& test_set,
                                         const GridSet& train_set, int rounds,
                                         std::uint64_t seed) {
  if (rounds < 1) throw DataError("permutation_importance: rounds must be >= 1");
  if (!(model.schema == test_set.schema) || !(model.schema == train_set.schema)) {
    throw DataError("permutation_importance: schema mismatch");
  }
  if (!test_set.both_classes_present()) {
    throw DataError("permutation_importance: test set needs both outcome classes");
  }

  const int F = model.schema.size();
  const int W = test_set.window_cfg.n_windows;
  const int n_test = test_set.size();

  nn::Stack stack = instantiate(model);
  const std::vector<int> labels = test_set.labels();
  const Sequence base_x = to_sequence(test_set);

  ImportanceHeatmap map;
  for (const auto& v : model.schema.variables) map.variables.push_back(v.name);
  map.windows = W;
  map.rounds = rounds;
  map.relative_difference = Eigen::MatrixXd::Zero(F, W);
  map.mean_permuted_auroc = Eigen::MatrixXd::Zero(F, W);
  map.per_round_auroc.assign(rounds, Eigen::MatrixXd::Zero(F, W));

  {
    const Matrix logits = stack.forward(base_x, Mode::Eval);
    map.baseline_auroc = auroc({to_std(nn::sigmoid(logits).col(0)), labels});
  }

  // Replacement pools: observed (pre-imputation) training values, already on
  // the model's standardized scale.
  std::vector<std::vector<std::vector<double>>> pools(
      F, std::vector<std::vector<double>>(W));
  for (const auto& g : train_set.grids) {
    for (int w = 0; w < W; ++w) {
      for (int f = 0; f < F; ++f) {
        if (g.mask(w, f)) pools[f][w].push_back(g.values(w, f));
      }
    }
  }
  for (int f = 0; f < F; ++f) {
    std::vector<double> pooled;
    for (int w = 0; w < W; ++w) {
      pooled.insert(pooled.end(), pools[f][w].begin(), pools[f][w].end());
    }
    for (int w = 0; w < W; ++w) {
      if (!pools[f][w].empty()) continue;
      if (!pooled.empty()) {
        pools[f][w] = pooled;
        map.notes.push_back("variable '" + map.variables[f] + "' window " +
                            std::to_string(w) +
                            ": no observed training values; pooled across windows");
      } else {
        // never observed anywhere: fall back to the (imputed) training column
        for (const auto& g : train_set.grids) pools[f][w].push_back(g.values(w, f));
        map.notes.push_back("variable '" + map.variables[f] + "' window " +
                            std::to_string(w) +
                            ": never observed in training; using imputed values");
      }
    }
  }

  const Rng root(seed);
  Sequence x = base_x;  // scratch copy; the perturbed column is restored per round
  for (int f = 0; f < F; ++f) {
    for (int w = 0; w < W; ++w) {
      const std::vector<double>& pool = pools[f][w];
      double sum_auroc = 0.0;
      for (int r = 0; r < rounds; ++r) {
        Rng rng = root.fork((static_cast<std::uint64_t>(f) * W + w) * rounds + r);
        for (int i = 0; i < n_test; ++i) {
          x[w](i, f) = pool[rng.index(pool.size())];
        }
        const Matrix logits = stack.forward(x, Mode::Eval);
        const double a = auroc({to_std(nn::sigmoid(logits).col(0)), labels});
        map.per_round_auroc[r](f, w) = a;
        sum_auroc += a;
      }
      x[w].col(f) = base_x[w].col(f);
      const double mean_auroc = sum_auroc / static_cast<double>(rounds);
      map.mean_permuted_auroc(f, w) = mean_auroc;
      map.relative_difference(f, w) =
          relative_difference(mean_auroc, map.baseline_auroc);
    }
  }
  return map;
}

EmbeddingPlot confusion_plot(const TrainedModel& model, const GridSet& set,
                             const std::string& cohort_tag, const TsneConfig& cfg) {
  EmbeddingPlot plot;
  plot.cohort_tag = cohort_tag;
  for (const auto& g : set.grids) {
    plot.patient_ids.push_back(g.patient_id);
    plot.outcome.push_back(g.outcome);
  }
  const nn::Matrix rep = extract_representation(model, set);
  plot.points = tsne(rep, cfg).embedding;
  return plot;
}

}  // namespace timeagg
