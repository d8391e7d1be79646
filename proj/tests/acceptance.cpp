// Acceptance suite: one pass/fail line per criterion. Run with no arguments
// for the full set, or pass criterion numbers (1..8) to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "timeagg/artifact.hpp"
#include "timeagg/cohort_io.hpp"
#include "timeagg/commands.hpp"
#include "timeagg/interpret.hpp"
#include "timeagg/metrics.hpp"
#include "timeagg/synth.hpp"
#include "timeagg/tpe.hpp"
#include "timeagg/tsne.hpp"

using namespace timeagg;
namespace fs = std::filesystem;

namespace {

struct Reporter {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << "    FAILED: " << what << "\n";
    }
  }
  void note(const std::string& line) { detail << "    " << line << "\n"; }
};

// ---------------------------------------------------------------------------
// 1. Gradient correctness

bool criterion_gradients(Reporter& r) {
  using namespace nn;
  Rng rng(8101);
  double worst_ff = 0.0, worst_rec = 0.0;

  for (int i = 0; i < 20; ++i) {
    {
      Dense layer("dense", 3, 2, i % 2 ? Activation::Relu : Activation::Linear);
      layer.init(rng);
      layer.bias = testing::random_matrix(1, 2, rng, 0.2);
      worst_ff = std::max(worst_ff,
                          testing::layer_gradient_check(
                              layer, testing::random_matrix(4, 3, rng), rng)
                              .max_rel_err);
    }
    {
      Dense output("output", 5, 1, Activation::Linear);
      output.init(rng);
      worst_ff = std::max(worst_ff,
                          testing::layer_gradient_check(
                              output, testing::random_matrix(6, 5, rng), rng)
                              .max_rel_err);
    }
    {
      TimeDistributedDense layer("tdd", 5, 4, Activation::Relu);
      layer.init(rng);
      worst_ff = std::max(worst_ff,
                          testing::layer_gradient_check(
                              layer, testing::random_sequence(3, 2, 5, rng), rng)
                              .max_rel_err);
    }
    for (ConvPadding pad : {ConvPadding::Valid, ConvPadding::Causal}) {
      Conv1D layer("conv", 4, 3, 2, pad, Activation::Relu);
      layer.init(rng);
      worst_ff = std::max(worst_ff,
                          testing::layer_gradient_check(
                              layer, testing::random_sequence(3, 2, 4, rng), rng)
                              .max_rel_err);
    }
    {
      Gru layer("gru", 5, 4);
      layer.init(rng);
      worst_rec = std::max(worst_rec,
                           testing::layer_gradient_check(
                               layer, testing::random_sequence(3, 2, 5, rng), rng)
                               .max_rel_err);
    }
    {
      Lstm layer("lstm", 5, 4);
      layer.init(rng);
      worst_rec = std::max(worst_rec,
                           testing::layer_gradient_check(
                               layer, testing::random_sequence(3, 2, 5, rng), rng)
                               .max_rel_err);
    }

    // full regularized loss through a complete network
    {
      HyperParams hp;
      hp.units_input = 4;
      hp.units_agg = 3;
      hp.units_dense = 3;
      hp.l1 = 0.01;
      hp.l2 = 0.02;
      Stack stack = build_network(ArchKind::TddGru, hp, 5, 3, rng.next_u64());
      auto params = stack.params();
      for (auto& p : params) {
        if (!p.is_weight) continue;
        *p.value =
            p.value->unaryExpr([](double w) { return w + (w >= 0.0 ? 0.1 : -0.1); });
      }
      const Sequence x = testing::random_sequence(3, 4, 5, rng);
      std::vector<int> labels(4);
      for (auto& y : labels) y = rng.bernoulli(0.5) ? 1 : 0;
      const auto loss = [&]() {
        return bce_with_logits(stack.forward(x, Mode::Eval), labels, hp.l1, hp.l2, params)
            .total;
      };
      stack.zero_grads();
      const BceResult res =
          bce_with_logits(stack.forward(x, Mode::Eval), labels, hp.l1, hp.l2, params);
      stack.backward(res.grad_logits);
      add_penalty_gradients(hp.l1, hp.l2, params);
      worst_rec = std::max(worst_rec, testing::fd_check_params(params, loss).max_rel_err);
    }
  }

  char buf[96];
  std::snprintf(buf, sizeof(buf), "max relative error: feed-forward %.2e, recurrent %.2e",
                worst_ff, worst_rec);
  r.note(buf);
  r.require(worst_ff < 1e-6, "feed-forward gradient error must stay below 1e-6");
  r.require(worst_rec < 1e-4, "recurrent gradient error must stay below 1e-4");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 2. auROC oracle equivalence

bool criterion_auroc(Reporter& r) {
  Rng rng(8202);
  int exact_matches = 0;
  for (int i = 0; i < 500; ++i) {
    ScoredSet s;
    const int n = 4 + static_cast<int>(rng.index(197));
    bool has_pos = false, has_neg = false;
    for (int k = 0; k < n; ++k) {
      double score = rng.uniform();
      if (rng.bernoulli(0.35)) score = std::round(score * 6.0) / 6.0;  // force ties
      const int label = rng.bernoulli(0.5) ? 1 : 0;
      (label ? has_pos : has_neg) = true;
      s.scores.push_back(score);
      s.labels.push_back(label);
    }
    if (!has_pos) s.labels[0] = 1;
    if (!has_neg) s.labels[1] = 0;
    if (auroc(s) == testing::brute_force_auroc(s.scores, s.labels)) ++exact_matches;
  }
  r.note("exact matches: " + std::to_string(exact_matches) + "/500");
  r.require(exact_matches == 500, "sorted auROC must equal brute force exactly");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 3. DeLong validity

bool criterion_delong(Reporter& r) {
  Rng rng(8303);
  double worst_gap = 0.0;
  for (int set_idx = 0; set_idx < 20; ++set_idx) {
    ScoredSet s;
    const double shift = 0.3 + 1.4 * rng.uniform();
    for (int i = 0; i < 100; ++i) {
      s.scores.push_back(rng.normal(0.0, 1.0));
      s.labels.push_back(0);
    }
    for (int i = 0; i < 100; ++i) {
      s.scores.push_back(rng.normal(shift, 1.0));
      s.labels.push_back(1);
    }
    const DelongCi ci = delong_ci(s);
    Rng boot_rng(9000 + set_idx);
    const auto [lo, hi] =
        testing::bootstrap_auc_ci(s.scores, s.labels, 10000, 0.05, boot_rng);
    worst_gap = std::max({worst_gap, std::abs(ci.lo - lo), std::abs(ci.hi - hi)});
  }
  r.note("worst CI endpoint gap vs bootstrap: " + std::to_string(worst_gap));
  r.require(worst_gap < 0.03, "DeLong CI endpoints within 0.03 of bootstrap");

  const ScoredSet separated{{0.1, 0.2, 0.3, 0.8, 0.9, 0.95}, {0, 0, 0, 1, 1, 1}};
  const DelongCi ci = delong_ci(separated);
  r.require(ci.variance == 0.0 && ci.lo == 1.0 && ci.hi == 1.0,
            "perfect separation must give zero variance and CI [1,1]");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 4. Table-1 ordering replication at desk scale

bool criterion_ordering(Reporter& r) {
  GeneratorConfig gen;
  gen.n_patients = 578;
  gen.signal_strength = 0.7;
  gen.seed = 20250401;
  const Cohort cohort = generate_cohort(gen);
  const PreparedData prepared =
      split_and_prepare(cohort, {0.638, 0.161, 0.201}, 7, {100, 3});
  const GridSet& train_set = prepared.splits[0];
  const GridSet& val_set = prepared.splits[1];
  const GridSet& test_set = prepared.splits[2];
  r.note("split sizes: " + std::to_string(train_set.size()) + "/" +
         std::to_string(val_set.size()) + "/" + std::to_string(test_set.size()));

  TrainConfig base;
  base.max_epochs = 200;

  std::map<ArchKind, double> mean_auc;
  int arch_index = 0;
  for (ArchKind kind : all_arch_kinds()) {
    const StudyResult study =
        tune_architecture(kind, train_set, val_set, 30, 101 + arch_index, base);
    double acc = 0.0;
    for (int s = 0; s < 5; ++s) {
      TrainConfig cfg = base;
      cfg.seed = 1000 + 17 * s;
      const TrainedModel model = train(kind, study.best.hp, train_set, val_set, cfg);
      const Eigen::VectorXd probs = predict(model, test_set);
      acc += auroc({std::vector<double>(probs.data(), probs.data() + probs.size()),
                    test_set.labels()});
    }
    mean_auc[kind] = acc / 5.0;
    r.note(to_string(kind) + ": mean test auROC " + std::to_string(mean_auc[kind]));
    ++arch_index;
  }

  const double dense = mean_auc[ArchKind::Dense];
  for (ArchKind kind : {ArchKind::TddDense, ArchKind::TddGru, ArchKind::TddLstm,
                        ArchKind::TddCnnValid, ArchKind::TddCnnCausal}) {
    r.require(mean_auc[kind] >= dense,
              to_string(kind) + " must reach at least the dense baseline");
  }
  r.require(mean_auc[ArchKind::TddGru] - dense >= 0.02,
            "tdd_gru must beat dense by at least 0.02");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 5. Permutation importance sanity

Cohort engineered_w2_cohort(std::uint64_t seed, int n) {
  Cohort cohort;
  cohort.schema.variables = {{"cdai", VarKind::Continuous, 0},
                             {"esr", VarKind::Continuous, 1},
                             {"noise", VarKind::Continuous, 2},
                             {"prednisone", VarKind::Binary, 3}};
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Patient p;
    p.id = "e" + std::to_string(i);
    double cdai = rng.uniform(5.0, 35.0);
    const int days[3] = {0, 60 + static_cast<int>(rng.index(41)),
                         160 + static_cast<int>(rng.index(41))};
    for (int v = 0; v < 3; ++v) {
      if (v > 0) cdai = std::clamp(cdai + rng.normal(0.0, 6.0), 0.0, 76.0);
      Visit visit;
      visit.day = days[v];
      visit.observations["cdai"] = cdai;
      visit.observations["esr"] = std::max(0.0, 2.0 * cdai + rng.normal(0.0, 10.0));
      visit.observations["noise"] = rng.normal(0.0, 1.0);
      visit.observations["prednisone"] = rng.bernoulli(0.3) ? 1.0 : 0.0;
      p.visits.push_back(std::move(visit));
    }
    p.index_day = p.visits.back().day;
    // outcome driven by window-2 CDAI alone
    p.outcome = cdai + rng.normal(0.0, 1.5) > 20.0 ? Outcome::Uncontrolled
                                                   : Outcome::Controlled;
    cohort.patients.push_back(std::move(p));
  }
  return cohort;
}

bool criterion_importance(Reporter& r) {
  double noise_abs_sum = 0.0;
  long noise_cells = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Cohort cohort = engineered_w2_cohort(7000 + seed, 420);
    const PreparedData prepared =
        split_and_prepare(cohort, {0.55, 0.15, 0.30}, 70 + seed, {100, 3});

    HyperParams hp;
    hp.units_input = 8;
    hp.units_agg = 8;
    hp.units_dense = 8;
    hp.l1 = 1e-3;
    hp.l2 = 1e-3;
    TrainConfig cfg;
    cfg.max_epochs = 120;
    cfg.seed = 500 + seed;
    const TrainedModel model =
        train(ArchKind::Dense, hp, prepared.splits[0], prepared.splits[1], cfg);

    const ImportanceHeatmap map = permutation_importance(
        model, prepared.splits[2], prepared.splits[0], 20, 900 + seed);

    // locate the most negative cell
    int best_f = -1, best_w = -1;
    double most_negative = std::numeric_limits<double>::infinity();
    for (int f = 0; f < static_cast<int>(map.variables.size()); ++f) {
      for (int w = 0; w < map.windows; ++w) {
        if (map.relative_difference(f, w) < most_negative) {
          most_negative = map.relative_difference(f, w);
          best_f = f;
          best_w = w;
        }
      }
    }
    r.note("seed " + std::to_string(seed) + ": baseline auROC " +
           std::to_string(map.baseline_auroc) + ", most negative cell (" +
           map.variables[best_f] + ", w" + std::to_string(best_w) + ") = " +
           std::to_string(most_negative));
    r.require(map.variables[best_f] == "cdai" && best_w == 2,
              "(cdai, w2) must be the most negative cell");

    for (int w = 0; w < map.windows; ++w) {
      noise_abs_sum += std::abs(map.relative_difference(2, w));
      ++noise_cells;
    }
  }
  const double noise_mean = noise_abs_sum / static_cast<double>(noise_cells);
  r.note("mean |relative difference| of the noise variable: " + std::to_string(noise_mean));
  r.require(noise_mean < 0.01, "noise variable must average below 0.01");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 6. t-SNE recovery

bool criterion_tsne(Reporter& r) {
  Rng rng(8606);
  const int per_cluster = 50;
  Eigen::MatrixXd x(3 * per_cluster, 8);
  std::vector<int> truth(3 * per_cluster);
  // unit-variance clusters, centers 10 sigma apart
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(3, 8);
  centers(1, 0) = 10.0;
  centers(2, 1) = 10.0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      const int row = c * per_cluster + i;
      truth[row] = c;
      for (int d = 0; d < 8; ++d) x(row, d) = centers(c, d) + rng.normal(0.0, 1.0);
    }
  }

  TsneConfig cfg;
  cfg.perplexity = 30.0;
  cfg.iters = 1000;
  cfg.seed = 12;
  const TsneResult res = tsne(x, cfg);

  const Eigen::MatrixXd& p = res.joint_p;
  r.require((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-15, "P must be symmetric");
  double min_off_diag = 1.0;
  for (long i = 0; i < p.rows(); ++i) {
    for (long j = 0; j < p.cols(); ++j) {
      if (i != j) min_off_diag = std::min(min_off_diag, p(i, j));
    }
  }
  r.require(min_off_diag >= 1e-12, "off-diagonal P entries must be floored at 1e-12");
  r.require(std::abs(p.sum() - 1.0) < 1e-9, "P must sum to 1 within 1e-9");

  Rng km_rng(77);
  const auto assign = testing::kmeans(res.embedding, 3, km_rng);
  const double purity = testing::cluster_purity(assign, truth, 3);
  r.note("k-means purity on the embedding: " + std::to_string(purity));
  r.require(purity >= 0.95, "cluster purity must reach 0.95");
  return r.ok;
}

// ---------------------------------------------------------------------------
// 7. Determinism & round-trip

bool criterion_determinism(Reporter& r) {
  const fs::path root = fs::temp_directory_path() / "timeagg_acceptance7";
  fs::remove_all(root);
  fs::create_directories(root);

  const auto run = [&](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (code != 0) {
      r.require(false, "command failed: " + err.str());
    }
    return code == 0;
  };

  const fs::path data = root / "data";
  if (!run({"synth", "--n-patients", "150", "--seed", "5", "--out", data.string()})) {
    return r.ok;
  }
  const std::vector<std::string> data_flags = {
      "--cohort", (data / "cohort.jsonl").string(), "--schema",
      (data / "schema.json").string()};

  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"synth", {"synth", "--n-patients", "150", "--seed", "5"}},
      {"prepare", {"prepare", "--split-seed", "7"}},
      {"tune", {"tune", "--arch", "dense", "--trials", "3", "--epochs", "5", "--seed", "3"}},
      {"train",
       {"train", "--arch", "tdd_gru", "--epochs", "8", "--units-input", "8",
        "--units-agg", "4", "--units-dense", "4", "--dropout", "0.2", "--seed", "3"}},
      {"importance", {"importance", "--rounds", "3", "--seed", "9"}},
      {"confusion",
       {"confusion", "--tsne-iters", "150", "--perplexity", "12", "--seed", "4"}},
  };

  const fs::path model_dir = root / "model";
  {
    std::vector<std::string> args = {"train",         "--arch",      "tdd_gru",
                                     "--epochs",      "8",           "--units-input",
                                     "8",             "--units-agg", "4",
                                     "--units-dense", "4",           "--seed",
                                     "3",             "--out",       model_dir.string()};
    args.insert(args.end(), data_flags.begin(), data_flags.end());
    if (!run(args)) return r.ok;
  }
  const std::string model_path = (model_dir / "model_tdd_gru.json").string();

  for (const auto& [name, base_args] : commands) {
    const fs::path dir_a = root / (name + "_a");
    const fs::path dir_b = root / (name + "_b");
    for (const auto& dir : {dir_a, dir_b}) {
      std::vector<std::string> args = base_args;
      if (name != "synth") args.insert(args.end(), data_flags.begin(), data_flags.end());
      if (name == "importance" || name == "confusion") {
        args.insert(args.end(), {"--model", model_path});
      }
      args.insert(args.end(), {"--out", dir.string()});
      if (!run(args)) return r.ok;
    }
    for (const auto& entry : fs::directory_iterator(dir_a)) {
      const auto name_only = entry.path().filename();
      std::ifstream fa(entry.path(), std::ios::binary);
      std::ifstream fb(dir_b / name_only, std::ios::binary);
      const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                                std::istreambuf_iterator<char>());
      const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                                std::istreambuf_iterator<char>());
      r.require(bytes_a == bytes_b,
                name + ": " + name_only.string() + " differs between reruns");
    }
    r.note(name + ": reruns byte-identical");
  }

  // eval twice (needs the sweep artifacts in place)
  {
    const fs::path dir_a = root / "eval_a";
    const fs::path dir_b = root / "eval_b";
    for (const auto& dir : {dir_a, dir_b}) {
      std::vector<std::string> args = {"eval",  "--model", model_path,
                                       "--out", dir.string()};
      args.insert(args.end(), data_flags.begin(), data_flags.end());
      if (!run(args)) return r.ok;
    }
    std::ifstream fa(dir_a / "eval.csv"), fb(dir_b / "eval.csv");
    const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                              std::istreambuf_iterator<char>());
    r.require(bytes_a == bytes_b, "eval.csv differs between reruns");
    r.note("eval: reruns byte-identical");
  }

  // artifact round-trip: save -> load -> predict must be bitwise identical
  {
    const TrainedModel model = load_model(model_path);
    const Cohort cohort =
        load_cohort((data / "cohort.jsonl").string(), (data / "schema.json").string());
    const auto splits = stratified_split(cohort, {0.638, 0.161, 0.201}, 7);
    const GridSet probe = prepare_with_stats(splits[2], model.stats, model.window_cfg);
    const Eigen::VectorXd direct = predict(model, probe);

    const std::string copy_path = (root / "model_copy.json").string();
    save_model(model, copy_path);
    const Eigen::VectorXd reloaded = predict(load_model(copy_path), probe);
    r.require((direct.array() == reloaded.array()).all(),
              "artifact round-trip must reproduce predictions bitwise");
    r.note("artifact round-trip bitwise identical");
  }
  return r.ok;
}

// ---------------------------------------------------------------------------
// 8. TPE efficacy

bool criterion_tpe(Reporter& r) {
  const SearchSpace space;
  const auto objective = [](const HyperParams& hp, std::uint64_t) {
    return (hp.dropout - 0.3) * (hp.dropout - 0.3);
  };

  std::vector<double> random_bests;
  for (std::uint64_t repeat = 0; repeat < 10; ++repeat) {
    Rng rng(6000 + repeat);
    double best = std::numeric_limits<double>::infinity();
    std::vector<Trial> empty;
    for (int i = 0; i < 50; ++i) {
      const HyperParams hp = suggest(empty, space, rng);
      best = std::min(best, objective(hp, 0));
    }
    random_bests.push_back(best);
  }
  std::sort(random_bests.begin(), random_bests.end());
  const double random_median = 0.5 * (random_bests[4] + random_bests[5]);

  int wins = 0;
  for (std::uint64_t repeat = 0; repeat < 10; ++repeat) {
    const StudyResult res = run_study(objective, space, 50, 5000 + repeat);
    if (res.best.objective < random_median) ++wins;
  }
  r.note("random-search median " + std::to_string(random_median) + "; TPE wins " +
         std::to_string(wins) + "/10");
  r.require(wins >= 8, "TPE must beat the random-search median in at least 8/10 repeats");
  return r.ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<bool(Reporter&)>>> criteria = {
      {"gradient correctness (finite differences, all layer kinds)", criterion_gradients},
      {"auROC equals brute-force pair counting exactly", criterion_auroc},
      {"DeLong CI validity vs bootstrap", criterion_delong},
      {"architecture ordering on synthetic data (TDD >= dense, GRU +0.02)",
       criterion_ordering},
      {"permutation importance locates the engineered signal", criterion_importance},
      {"t-SNE recovers well-separated clusters", criterion_tsne},
      {"CLI determinism and artifact round-trip", criterion_determinism},
      {"TPE efficacy vs random search", criterion_tpe},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }

  int failures = 0;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 1;
    }
    const auto& [name, fn] = criteria[id - 1];
    Reporter reporter;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = fn(reporter);
    } catch (const std::exception& e) {
      reporter.detail << "    EXCEPTION: " << e.what() << "\n";
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                seconds);
    std::fputs(reporter.detail.str().c_str(), stdout);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
