#include "timeagg/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "timeagg/artifact.hpp"
#include "timeagg/cohort_io.hpp"
#include "timeagg/errors.hpp"
#include "timeagg/format.hpp"
#include "timeagg/interpret.hpp"
#include "timeagg/metrics.hpp"
#include "timeagg/svg.hpp"
#include "timeagg/synth.hpp"
#include "timeagg/tpe.hpp"

namespace timeagg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.get_string("out", "."));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

WindowConfig window_config(const RunConfig& cfg) {
  WindowConfig w;
  w.window_len = static_cast<int>(cfg.get_int("window_len", 100));
  w.n_windows = static_cast<int>(cfg.get_int("n_windows", 3));
  if (w.window_len < 1 || w.n_windows < 1) {
    throw UsageError("window_len and n_windows must be positive");
  }
  return w;
}

std::vector<double> split_fractions(const RunConfig& cfg) {
  return cfg.get_fractions("fractions", {0.638, 0.161, 0.201});
}

std::vector<std::string> split_names(std::size_t k) {
  if (k == 3) return {"train", "val", "test"};
  if (k == 2) return {"train", "test"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("split" + std::to_string(i));
  return names;
}

Cohort load_input_cohort(const RunConfig& cfg) {
  return load_cohort(cfg.require_string("cohort"), cfg.require_string("schema"));
}

std::vector<Cohort> split_input_cohort(const RunConfig& cfg, const Cohort& cohort) {
  return stratified_split(cohort, split_fractions(cfg), cfg.get_seed("split_seed", 7));
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.batch_size = static_cast<int>(cfg.get_int("batch_size", 64));
  tc.max_epochs = static_cast<int>(cfg.get_int("epochs", 200));
  tc.seed = cfg.get_seed("seed", 1);
  return tc;
}

GeneratorConfig generator_config(const RunConfig& cfg) {
  GeneratorConfig gc;
  gc.n_patients = static_cast<int>(cfg.get_int("n_patients", 600));
  gc.mean_visits = cfg.get_double("mean_visits", 8.0);
  gc.visit_gap_median = cfg.get_double("gap_median", 100.0);
  gc.signal_strength = cfg.get_double("signal", 0.7);
  gc.seed = cfg.get_seed("seed", 1);
  gc.prevalence_target = cfg.get_double("prevalence", 0.4);
  gc.cdai_threshold = cfg.get_double("cdai_threshold", 10.0);
  gc.id_prefix = cfg.get_string("id_prefix", "p");
  gc.dmard_rate_scale = cfg.get_double("dmard_rate_scale", 1.0);
  gc.prednisone_midpoint = cfg.get_double("prednisone_midpoint", 22.0);
  gc.switch_midpoint = cfg.get_double("switch_midpoint", 24.0);
  return gc;
}

HyperParams hyperparams_from_config(const RunConfig& cfg) {
  if (cfg.has("best")) return load_best_trial(cfg.require_string("best")).hp;
  HyperParams hp;
  hp.units_input = static_cast<int>(cfg.get_int("units_input", 16));
  hp.units_agg = static_cast<int>(cfg.get_int("units_agg", 16));
  hp.units_dense = static_cast<int>(cfg.get_int("units_dense", 16));
  hp.l1 = cfg.get_double("l1", 0.0);
  hp.l2 = cfg.get_double("l2", 0.0);
  hp.dropout = cfg.get_double("dropout", 0.0);
  hp.conv_kernel = static_cast<int>(cfg.get_int("conv_kernel", 2));
  hp.validate();
  return hp;
}

TsneConfig tsne_config(const RunConfig& cfg) {
  TsneConfig tc;
  tc.perplexity = cfg.get_double("perplexity", 30.0);
  tc.iters = static_cast<int>(cfg.get_int("tsne_iters", 1000));
  tc.seed = cfg.get_seed("seed", 1);
  return tc;
}

std::string ci_line(const DelongCi& ci) {
  return format_fixed(ci.auc, 3) + " [" + format_fixed(ci.lo, 3) + ", " +
         format_fixed(ci.hi, 3) + "]";
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  if (cfg.get_bool("pair", false)) {
    const auto [a, b] = make_benchmark_pair(cfg.get_seed("seed", 1));
    save_schema(a.schema, (dir / "schema.json").string());
    save_cohort(a, (dir / "cohort_a.jsonl").string());
    save_cohort(b, (dir / "cohort_b.jsonl").string());
    out << "wrote cohort_a.jsonl (n=" << a.patients.size()
        << ", prevalence=" << format_fixed(a.prevalence(), 3) << "), cohort_b.jsonl (n="
        << b.patients.size() << ", prevalence=" << format_fixed(b.prevalence(), 3)
        << "), schema.json\n";
    return;
  }
  const Cohort cohort = generate_cohort(generator_config(cfg));
  save_schema(cohort.schema, (dir / "schema.json").string());
  save_cohort(cohort, (dir / "cohort.jsonl").string());
  out << "wrote cohort.jsonl (n=" << cohort.patients.size()
      << ", prevalence=" << format_fixed(cohort.prevalence(), 3) << ") and schema.json\n";
}

void cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const Cohort cohort = load_input_cohort(cfg);
  const auto splits = split_input_cohort(cfg, cohort);
  const PreparedData prepared = prepare(splits, window_config(cfg), 0);
  const auto names = split_names(splits.size());

  json split_ids = json::object();
  for (std::size_t s = 0; s < splits.size(); ++s) {
    export_grids_csv(prepared.splits[s], (dir / ("grids_" + names[s] + ".csv")).string());
    json ids = json::array();
    for (const auto& p : splits[s].patients) ids.push_back(p.id);
    split_ids[names[s]] = std::move(ids);
  }
  save_stats(prepared.stats, cohort.schema, (dir / "stats.json").string());
  {
    std::ofstream f = open_out(dir / "splits.json");
    f << split_ids.dump(1) << "\n";
  }

  out << "prepared " << cohort.patients.size() << " patients into";
  for (std::size_t s = 0; s < splits.size(); ++s) {
    out << " " << names[s] << "=" << splits[s].patients.size();
  }
  out << "; wrote grids_*.csv, stats.json, splits.json\n";
}

void cmd_tune(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const Cohort cohort = load_input_cohort(cfg);
  const auto splits = split_input_cohort(cfg, cohort);
  if (splits.size() < 2) throw UsageError("tune needs train and validation splits");
  const PreparedData prepared = prepare(splits, window_config(cfg), 0);

  const ArchKind kind = arch_from_string(cfg.get_string("arch", "tdd_gru"));
  const int trials = static_cast<int>(cfg.get_int("trials", 30));
  const StudyResult study =
      tune_architecture(kind, prepared.splits[0], prepared.splits[1], trials,
                        cfg.get_seed("seed", 1), train_config(cfg));

  const std::string arch = to_string(kind);
  save_study_log(study, (dir / ("study_" + arch + ".jsonl")).string());
  save_best_trial(study.best, (dir / ("best_" + arch + ".json")).string());
  out << "tuned " << arch << " over " << trials
      << " trials; best val BCE=" << format_double(study.best.objective) << "; wrote study_"
      << arch << ".jsonl, best_" << arch << ".json\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const Cohort cohort = load_input_cohort(cfg);
  const auto splits = split_input_cohort(cfg, cohort);
  if (splits.size() < 2) throw UsageError("train needs at least two splits");
  const WindowConfig wcfg = window_config(cfg);
  const ArchKind kind = arch_from_string(cfg.get_string("arch", "tdd_gru"));
  const HyperParams hp = hyperparams_from_config(cfg);
  const TrainConfig tc = train_config(cfg);

  TrainedModel model;
  if (cfg.get_bool("merge_val", false)) {
    const double holdout = cfg.get_double("holdout", 0.1);
    const auto [fit, monitor] = merge_with_holdout(
        splits[0], splits[1], holdout, mix64(cfg.get_seed("split_seed", 7) ^ 0x686fULL));
    const PreparedData prepared = prepare({fit, monitor}, wcfg, 0);
    model = train(kind, hp, prepared.splits[0], prepared.splits[1], tc);
    model.stats = prepared.stats;
    out << "merged train+val: " << fit.patients.size() + monitor.patients.size()
        << " patients; holdout for checkpointing: " << monitor.patients.size() << "\n";
  } else {
    const PreparedData prepared = prepare(splits, wcfg, 0);
    model = train(kind, hp, prepared.splits[0], prepared.splits[1], tc);
    model.stats = prepared.stats;
  }

  const std::string arch = to_string(kind);
  const std::string path = (dir / ("model_" + arch + ".json")).string();
  save_model(model, path);
  out << "trained " << arch << ": best epoch " << model.best_epoch << "/"
      << model.history.size() << ", val BCE=" << format_double(model.best_val_loss)
      << "; wrote model_" << arch << ".json\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const Cohort cohort = load_input_cohort(cfg);
  const auto splits = split_input_cohort(cfg, cohort);
  const long default_split = static_cast<long>(splits.size()) - 1;
  const auto eval_split = cfg.get_int("eval_split", default_split);
  if (eval_split < 0 || eval_split >= static_cast<long>(splits.size())) {
    throw UsageError("eval_split out of range");
  }

  std::vector<std::string> model_paths;
  if (cfg.get_bool("sweep", false)) {
    const fs::path models_dir(cfg.get_string("models_dir", dir.string()));
    for (ArchKind kind : all_arch_kinds()) {
      const fs::path p = models_dir / ("model_" + to_string(kind) + ".json");
      if (fs::exists(p)) model_paths.push_back(p.string());
    }
    if (model_paths.empty()) {
      throw DataError("sweep: no model_<arch>.json artifacts in '" + models_dir.string() + "'");
    }
  } else {
    model_paths.push_back(cfg.require_string("model"));
  }

  struct Row {
    std::string arch;
    DelongCi ci;
  };
  std::vector<Row> rows;
  for (const auto& path : model_paths) {
    const TrainedModel model = load_model(path);
    const GridSet set =
        prepare_with_stats(splits[eval_split], model.stats, model.window_cfg);
    const Eigen::VectorXd probs = predict(model, set);
    ScoredSet scored;
    scored.scores.assign(probs.data(), probs.data() + probs.size());
    scored.labels = set.labels();
    rows.push_back({to_string(model.kind), delong_ci(scored)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.ci.auc > b.ci.auc; });

  std::ofstream csv = open_out(dir / "eval.csv");
  csv << "function,auc,ci_lo,ci_hi\n";
  for (const auto& r : rows) {
    csv << r.arch << "," << format_double(r.ci.auc) << "," << format_double(r.ci.lo)
        << "," << format_double(r.ci.hi) << "\n";
    out << r.arch << ": auROC " << ci_line(r.ci) << "\n";
  }
}

void cmd_importance(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const TrainedModel model = load_model(cfg.require_string("model"));
  const Cohort cohort = load_input_cohort(cfg);
  const auto splits = split_input_cohort(cfg, cohort);
  const GridSet train_set =
      prepare_with_stats(splits.front(), model.stats, model.window_cfg);
  const GridSet test_set =
      prepare_with_stats(splits.back(), model.stats, model.window_cfg);

  const int rounds = static_cast<int>(cfg.get_int("rounds", 20));
  const ImportanceHeatmap map = permutation_importance(model, test_set, train_set,
                                                       rounds, cfg.get_seed("seed", 1));

  std::ofstream csv = open_out(dir / "importance.csv");
  csv << "# baseline_auroc=" << format_double(map.baseline_auroc) << "\n";
  for (const auto& note : map.notes) csv << "# note: " << note << "\n";
  csv << "variable,window,relative_difference,mean_permuted_auroc";
  for (int r = 0; r < map.rounds; ++r) csv << ",auroc_r" << r;
  csv << "\n";
  for (std::size_t f = 0; f < map.variables.size(); ++f) {
    for (int w = 0; w < map.windows; ++w) {
      csv << map.variables[f] << "," << w << ","
          << format_double(map.relative_difference(f, w)) << ","
          << format_double(map.mean_permuted_auroc(f, w));
      for (int r = 0; r < map.rounds; ++r) {
        csv << "," << format_double(map.per_round_auroc[r](f, w));
      }
      csv << "\n";
    }
  }
  {
    std::ofstream svg = open_out(dir / "importance.svg");
    svg << render_heatmap_svg(map);
  }
  out << "importance heatmap over " << map.variables.size() << " variables x "
      << map.windows << " windows (baseline auROC "
      << format_fixed(map.baseline_auroc, 3) << "); wrote importance.csv, importance.svg\n";
}

void cmd_confusion(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const TrainedModel model = load_model(cfg.require_string("model"));
  const TsneConfig tsne_cfg = tsne_config(cfg);

  std::vector<EmbeddingPlot> plots;
  {
    const Cohort a = load_input_cohort(cfg);
    const GridSet set = prepare_with_stats(a, model.stats, model.window_cfg);
    plots.push_back(confusion_plot(model, set, cfg.get_string("tag_a", "cohort_a"), tsne_cfg));
  }
  if (cfg.has("cohort_b")) {
    const Cohort b = load_cohort(cfg.require_string("cohort_b"),
                                 cfg.get_string("schema_b", cfg.require_string("schema")));
    const GridSet set = prepare_with_stats(b, model.stats, model.window_cfg);
    plots.push_back(confusion_plot(model, set, cfg.get_string("tag_b", "cohort_b"), tsne_cfg));
  }

  struct Row {
    std::string tag, id;
    double x, y;
    int outcome;
  };
  std::vector<Row> rows;
  for (const auto& plot : plots) {
    for (std::size_t i = 0; i < plot.patient_ids.size(); ++i) {
      rows.push_back({plot.cohort_tag, plot.patient_ids[i], plot.points(i, 0),
                      plot.points(i, 1), plot.outcome[i]});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.tag, a.id) < std::tie(b.tag, b.id);
  });

  std::ofstream csv = open_out(dir / "embedding.csv");
  csv << "patient_id,x,y,outcome,cohort_tag\n";
  for (const auto& r : rows) {
    csv << r.id << "," << format_double(r.x) << "," << format_double(r.y) << ","
        << (r.outcome ? "uncontrolled" : "controlled") << "," << r.tag << "\n";
  }
  {
    std::ofstream svg = open_out(dir / "confusion.svg");
    svg << render_embedding_svg(plots);
  }
  out << "confusion plot with " << plots.size() << " panel(s), " << rows.size()
      << " points; wrote embedding.csv, confusion.svg\n";
}

}  // namespace timeagg
