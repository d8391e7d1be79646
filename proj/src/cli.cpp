#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "timeagg/commands.hpp"
#include "timeagg/errors.hpp"

namespace timeagg {

namespace {

struct SubcommandSpec {
  std::string name;
  std::string description;
  std::vector<std::pair<std::string, std::string>> options;  // flag -> config key
  std::vector<std::pair<std::string, std::string>> switches; // boolean flags
  void (*handler)(const RunConfig&, std::ostream&);
};

const std::vector<SubcommandSpec>& subcommands() {
  static const std::vector<SubcommandSpec> specs = {
      {"synth",
       "Generate a synthetic cohort (JSON-Lines + schema)",
       {{"--n-patients", "n_patients"},
        {"--mean-visits", "mean_visits"},
        {"--gap-median", "gap_median"},
        {"--signal", "signal"},
        {"--prevalence", "prevalence"},
        {"--cdai-threshold", "cdai_threshold"},
        {"--id-prefix", "id_prefix"}},
       {{"--pair", "pair"}},
       &cmd_synth},
      {"prepare",
       "Split, window, aggregate, impute and standardize a cohort",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--fractions", "fractions"},
        {"--split-seed", "split_seed"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"}},
       {},
       &cmd_prepare},
      {"tune",
       "Bayesian (TPE) hyperparameter search for one architecture",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--fractions", "fractions"},
        {"--split-seed", "split_seed"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"},
        {"--arch", "arch"},
        {"--trials", "trials"},
        {"--epochs", "epochs"},
        {"--batch-size", "batch_size"}},
       {},
       &cmd_tune},
      {"train",
       "Train one architecture and write a model artifact",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--fractions", "fractions"},
        {"--split-seed", "split_seed"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"},
        {"--arch", "arch"},
        {"--best", "best"},
        {"--epochs", "epochs"},
        {"--batch-size", "batch_size"},
        {"--holdout", "holdout"},
        {"--units-input", "units_input"},
        {"--units-agg", "units_agg"},
        {"--units-dense", "units_dense"},
        {"--l1", "l1"},
        {"--l2", "l2"},
        {"--dropout", "dropout"},
        {"--conv-kernel", "conv_kernel"}},
       {{"--merge-val", "merge_val"}},
       &cmd_train},
      {"eval",
       "auROC with DeLong 95% CI on a held-out split",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--fractions", "fractions"},
        {"--split-seed", "split_seed"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"},
        {"--model", "model"},
        {"--models-dir", "models_dir"},
        {"--eval-split", "eval_split"}},
       {{"--sweep", "sweep"}},
       &cmd_eval},
      {"importance",
       "Longitudinal permutation importance heatmap (CSV + SVG)",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--fractions", "fractions"},
        {"--split-seed", "split_seed"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"},
        {"--model", "model"},
        {"--rounds", "rounds"}},
       {},
       &cmd_importance},
      {"confusion",
       "t-SNE confusion plot of final dense representations (CSV + SVG)",
       {{"--cohort", "cohort"},
        {"--schema", "schema"},
        {"--cohort-b", "cohort_b"},
        {"--schema-b", "schema_b"},
        {"--tag-a", "tag_a"},
        {"--tag-b", "tag_b"},
        {"--model", "model"},
        {"--window-len", "window_len"},
        {"--n-windows", "n_windows"},
        {"--perplexity", "perplexity"},
        {"--tsne-iters", "tsne_iters"}},
       {},
       &cmd_confusion},
  };
  return specs;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"timeagg: longitudinal time-aggregation forecasting pipeline"};
  app.require_subcommand(1);

  struct Collected {
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::string config_path;
    const SubcommandSpec* spec = nullptr;
  } collected;

  for (const auto& spec : subcommands()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.description);
    sub->add_option("--config", collected.config_path, "key = value config file");
    sub->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { collected.values["seed"] = v; },
        "global random seed");
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { collected.values["out"] = v; },
        "output directory");
    for (const auto& [flag, key] : spec.options) {
      const std::string k = key;
      sub->add_option_function<std::string>(
          flag, [&collected, k](const std::string& v) { collected.values[k] = v; });
    }
    for (const auto& [flag, key] : spec.switches) {
      const std::string k = key;
      sub->add_flag_function(
          flag, [&collected, k](std::int64_t) { collected.flags[k] = true; });
    }
    sub->callback([&collected, &spec]() { collected.spec = &spec; });
  }

  try {
    std::vector<std::string> argv_like = args;
    argv_like.insert(argv_like.begin(), "timeagg");
    std::vector<const char*> argv;
    for (const auto& a : argv_like) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // prints scope-correct help to `out`, one-line diagnostics to `err`
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = collected.config_path.empty() ? RunConfig()
                                                  : RunConfig::from_file(collected.config_path);
    for (const auto& [k, v] : collected.values) cfg.set(k, v);
    for (const auto& [k, v] : collected.flags) cfg.set(k, v ? "true" : "false");
    collected.spec->handler(cfg, out);
    return 0;
  } catch (const UsageError& e) {
    err << "timeagg: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    err << "timeagg: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "timeagg: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace timeagg
