#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "timeagg/artifact.hpp"
#include "timeagg/cohort_io.hpp"
#include "timeagg/commands.hpp"
#include "timeagg/model.hpp"
#include "timeagg/rng.hpp"

using namespace timeagg;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult res;
  res.code = run_cli(args, out, err);
  res.out = out.str();
  res.err = err.str();
  return res;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("timeagg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void check_dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(a)) {
    names.push_back(entry.path().filename());
  }
  REQUIRE_FALSE(names.empty());
  for (const auto& name : names) {
    INFO("file: ", name.string());
    CHECK(file_bytes(a / name) == file_bytes(b / name));
  }
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

/// Crafted cohort with exact class sizes (300 controlled / 278 uncontrolled)
/// so the UC-like split arithmetic (369/93/116) holds exactly.
void write_uc_like_cohort(const fs::path& dir) {
  Cohort cohort;
  cohort.schema.variables = {{"cdai", VarKind::Continuous, 0},
                             {"esr", VarKind::Continuous, 1},
                             {"prednisone", VarKind::Binary, 2}};
  Rng rng(404);
  for (int i = 0; i < 578; ++i) {
    Patient p;
    p.id = "c" + std::to_string(1000 + i);
    p.outcome = i < 300 ? Outcome::Controlled : Outcome::Uncontrolled;
    const double base = p.outcome == Outcome::Uncontrolled ? 24.0 : 8.0;
    const int n_visits = 1 + static_cast<int>(rng.index(4));
    int day = 0;
    for (int v = 0; v < n_visits; ++v) {
      Visit visit;
      visit.day = day;
      visit.observations["cdai"] = std::clamp(base + rng.normal(0.0, 5.0), 0.0, 76.0);
      if (rng.bernoulli(0.7)) {
        visit.observations["esr"] = std::max(0.0, 2.0 * base + rng.normal(0.0, 8.0));
      }
      visit.observations["prednisone"] = rng.bernoulli(base / 30.0) ? 1.0 : 0.0;
      p.visits.push_back(std::move(visit));
      day += 40 + static_cast<int>(rng.index(120));
    }
    p.index_day = p.visits.back().day;
    cohort.patients.push_back(std::move(p));
  }
  save_cohort(cohort, (dir / "cohort.jsonl").string());
  save_schema(cohort.schema, (dir / "schema.json").string());
}

std::vector<std::string> data_args(const fs::path& data) {
  return {"--cohort", (data / "cohort.jsonl").string(), "--schema",
          (data / "schema.json").string()};
}

void append(std::vector<std::string>& args, const std::vector<std::string>& extra) {
  args.insert(args.end(), extra.begin(), extra.end());
}

}  // namespace

TEST_CASE("synth writes byte-identical outputs for identical configs") {
  const fs::path a = fresh_dir("synth_a");
  const fs::path b = fresh_dir("synth_b");
  for (const auto& dir : {a, b}) {
    const CliResult res = run({"synth", "--n-patients", "100", "--seed", "5", "--out",
                               dir.string()});
    REQUIRE(res.code == 0);
    CHECK(res.out.find("n=100") != std::string::npos);
  }
  check_dirs_identical(a, b);
}

TEST_CASE("synth output round-trips through ingestion") {
  const fs::path dir = fresh_dir("synth_rt");
  REQUIRE(run({"synth", "--n-patients", "60", "--seed", "8", "--out", dir.string()})
              .code == 0);
  const Cohort cohort =
      load_cohort((dir / "cohort.jsonl").string(), (dir / "schema.json").string());
  CHECK(cohort.patients.size() == 60);
}

TEST_CASE("synth --pair writes two cohorts sharing one schema") {
  const fs::path dir = fresh_dir("synth_pair");
  const CliResult res =
      run({"synth", "--pair", "--seed", "4", "--out", dir.string()});
  REQUIRE(res.code == 0);
  CHECK(fs::exists(dir / "cohort_a.jsonl"));
  CHECK(fs::exists(dir / "cohort_b.jsonl"));
  CHECK(fs::exists(dir / "schema.json"));
}

TEST_CASE("prepare writes grids, stats and split ids") {
  const fs::path data = fresh_dir("prep_data");
  write_uc_like_cohort(data);
  const fs::path out_a = fresh_dir("prep_a");
  const fs::path out_b = fresh_dir("prep_b");
  for (const auto& dir : {out_a, out_b}) {
    std::vector<std::string> args = {"prepare", "--split-seed", "7", "--out", dir.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }
  check_dirs_identical(out_a, out_b);

  // 369 train patients * 3 windows + header
  CHECK(count_lines(file_bytes(out_a / "grids_train.csv")) == 369 * 3 + 1);
  CHECK(count_lines(file_bytes(out_a / "grids_val.csv")) == 93 * 3 + 1);
  CHECK(count_lines(file_bytes(out_a / "grids_test.csv")) == 116 * 3 + 1);
  CHECK(fs::exists(out_a / "stats.json"));
  CHECK(fs::exists(out_a / "splits.json"));
}

TEST_CASE("tune with budget one logs exactly one trial and replays identically") {
  const fs::path data = fresh_dir("tune_data");
  write_uc_like_cohort(data);
  const fs::path out_a = fresh_dir("tune_a");
  const fs::path out_b = fresh_dir("tune_b");
  for (const auto& dir : {out_a, out_b}) {
    std::vector<std::string> args = {"tune",      "--arch", "dense", "--trials", "1",
                                     "--epochs",  "4",      "--seed", "3",
                                     "--out",     dir.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }
  check_dirs_identical(out_a, out_b);
  CHECK(count_lines(file_bytes(out_a / "study_dense.jsonl")) == 1);

  const Trial best = load_best_trial((out_a / "best_dense.json").string());
  CHECK(best.complete);
}

TEST_CASE("tune best objective equals the minimum logged objective") {
  const fs::path data = fresh_dir("tune_min_data");
  write_uc_like_cohort(data);
  const fs::path out = fresh_dir("tune_min");
  std::vector<std::string> args = {"tune",     "--arch", "dense", "--trials", "5",
                                   "--epochs", "4",      "--seed", "9",
                                   "--out",    out.string()};
  append(args, data_args(data));
  REQUIRE(run(args).code == 0);

  const Trial best = load_best_trial((out / "best_dense.json").string());
  std::ifstream log(out / "study_dense.jsonl");
  std::string line;
  double min_objective = std::numeric_limits<double>::infinity();
  while (std::getline(log, line)) {
    const auto pos = line.find("\"objective\":");
    REQUIRE(pos != std::string::npos);
    min_objective = std::min(min_objective, std::stod(line.substr(pos + 12)));
  }
  CHECK(best.objective == doctest::Approx(min_objective).epsilon(1e-12));
}

TEST_CASE("train writes an artifact that reloads to identical predictions") {
  const fs::path data = fresh_dir("train_data");
  write_uc_like_cohort(data);
  const fs::path out = fresh_dir("train_out");
  std::vector<std::string> args = {"train",  "--arch",       "tdd_gru",
                                   "--epochs", "6",          "--units-input", "8",
                                   "--units-agg", "4",       "--units-dense", "4",
                                   "--seed", "2",            "--out", out.string()};
  append(args, data_args(data));
  const CliResult res = run(args);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("model_tdd_gru.json") != std::string::npos);

  const TrainedModel model = load_model((out / "model_tdd_gru.json").string());
  CHECK(model.history.size() <= 6);

  // bitwise round-trip on a probe set
  const Cohort cohort =
      load_cohort((data / "cohort.jsonl").string(), (data / "schema.json").string());
  const auto splits = stratified_split(cohort, {0.638, 0.161, 0.201}, 7);
  const GridSet probe = prepare_with_stats(splits[2], model.stats, model.window_cfg);
  const Eigen::VectorXd direct = predict(model, probe);

  const fs::path copy = out / "model_copy.json";
  save_model(model, copy.string());
  const TrainedModel reloaded = load_model(copy.string());
  const Eigen::VectorXd roundtrip = predict(reloaded, probe);
  CHECK((direct.array() == roundtrip.array()).all());
}

TEST_CASE("train --merge-val concatenates train and validation (462 patients)") {
  const fs::path data = fresh_dir("merge_data");
  write_uc_like_cohort(data);
  const fs::path out = fresh_dir("merge_out");
  std::vector<std::string> args = {"train",  "--arch",  "dense", "--merge-val",
                                   "--epochs", "4",     "--units-input", "8",
                                   "--units-agg", "4",  "--units-dense", "4",
                                   "--seed", "2",       "--out", out.string()};
  append(args, data_args(data));
  const CliResult res = run(args);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("merged train+val: 462 patients") != std::string::npos);
  CHECK(fs::exists(out / "model_dense.json"));
}

TEST_CASE("eval reports auc within its CI and sweeps sorted by auc") {
  const fs::path data = fresh_dir("eval_data");
  write_uc_like_cohort(data);
  const fs::path models = fresh_dir("eval_models");
  for (const std::string arch : {"dense", "tdd_dense", "tdd_gru", "tdd_lstm",
                                 "tdd_cnn_valid", "tdd_cnn_causal"}) {
    std::vector<std::string> args = {"train",  "--arch", arch,
                                     "--epochs", "5",    "--units-input", "8",
                                     "--units-agg", "4", "--units-dense", "4",
                                     "--seed", "3",      "--out", models.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }

  const fs::path out = fresh_dir("eval_out");
  std::vector<std::string> args = {"eval", "--sweep", "--models-dir", models.string(),
                                   "--out", out.string()};
  append(args, data_args(data));
  const CliResult res = run(args);
  REQUIRE(res.code == 0);

  std::ifstream csv(out / "eval.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "function,auc,ci_lo,ci_hi");
  double prev_auc = 1.0 + 1e-9;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::string arch, auc_s, lo_s, hi_s;
    std::getline(ss, arch, ',');
    std::getline(ss, auc_s, ',');
    std::getline(ss, lo_s, ',');
    std::getline(ss, hi_s, ',');
    const double auc = std::stod(auc_s), lo = std::stod(lo_s), hi = std::stod(hi_s);
    CHECK(lo <= auc);
    CHECK(auc <= hi);
    CHECK(auc <= prev_auc);  // sorted descending
    prev_auc = auc;
    ++rows;
  }
  CHECK(rows == 6);
}

TEST_CASE("importance writes a deterministic heatmap CSV with F*W rows") {
  const fs::path data = fresh_dir("imp_data");
  write_uc_like_cohort(data);
  const fs::path models = fresh_dir("imp_models");
  {
    std::vector<std::string> args = {"train",  "--arch", "dense",
                                     "--epochs", "5",    "--units-input", "8",
                                     "--units-agg", "4", "--units-dense", "4",
                                     "--seed", "3",      "--out", models.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }

  const fs::path out_a = fresh_dir("imp_a");
  const fs::path out_b = fresh_dir("imp_b");
  for (const auto& dir : {out_a, out_b}) {
    std::vector<std::string> args = {"importance", "--model",
                                     (models / "model_dense.json").string(),
                                     "--rounds", "3", "--seed", "6",
                                     "--out", dir.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }
  check_dirs_identical(out_a, out_b);

  const std::string csv = file_bytes(out_a / "importance.csv");
  CHECK(csv.rfind("# baseline_auroc=", 0) == 0);
  // metadata + header + 3 variables * 3 windows
  CHECK(count_lines(csv) == 1 + 1 + 3 * 3);
  CHECK(fs::exists(out_a / "importance.svg"));
}

TEST_CASE("confusion produces one panel per cohort and a sorted CSV") {
  const fs::path data = fresh_dir("conf_data");
  write_uc_like_cohort(data);
  const fs::path models = fresh_dir("conf_models");
  {
    std::vector<std::string> args = {"train",  "--arch", "dense",
                                     "--epochs", "5",    "--units-input", "8",
                                     "--units-agg", "4", "--units-dense", "4",
                                     "--seed", "3",      "--out", models.string()};
    append(args, data_args(data));
    REQUIRE(run(args).code == 0);
  }

  const fs::path pair = fresh_dir("conf_pair");
  REQUIRE(run({"synth", "--pair", "--seed", "11", "--out", pair.string()}).code == 0);

  // single cohort -> one panel
  const fs::path one = fresh_dir("conf_one");
  {
    std::vector<std::string> args = {"confusion",
                                     "--model", (models / "model_dense.json").string(),
                                     "--cohort", (data / "cohort.jsonl").string(),
                                     "--schema", (data / "schema.json").string(),
                                     "--tsne-iters", "120",
                                     "--perplexity", "15",
                                     "--seed", "2",
                                     "--out", one.string()};
    const CliResult res = run(args);
    REQUIRE(res.code == 0);
    CHECK(res.out.find("1 panel(s)") != std::string::npos);
  }

  // the pair cohorts share the synthetic schema, not the crafted one; train a
  // tiny model on cohort_a for the two-panel case
  const fs::path pair_model = fresh_dir("conf_pair_model");
  {
    std::vector<std::string> args = {"train", "--arch", "dense",
                                     "--epochs", "4", "--units-input", "8",
                                     "--units-agg", "4", "--units-dense", "4",
                                     "--seed", "5",
                                     "--cohort", (pair / "cohort_a.jsonl").string(),
                                     "--schema", (pair / "schema.json").string(),
                                     "--out", pair_model.string()};
    REQUIRE(run(args).code == 0);
  }
  const fs::path two = fresh_dir("conf_two");
  {
    std::vector<std::string> args = {"confusion",
                                     "--model", (pair_model / "model_dense.json").string(),
                                     "--cohort", (pair / "cohort_a.jsonl").string(),
                                     "--schema", (pair / "schema.json").string(),
                                     "--cohort-b", (pair / "cohort_b.jsonl").string(),
                                     "--tag-a", "uc_like",
                                     "--tag-b", "sn_like",
                                     "--tsne-iters", "120",
                                     "--perplexity", "15",
                                     "--seed", "2",
                                     "--out", two.string()};
    const CliResult res = run(args);
    REQUIRE(res.code == 0);
    CHECK(res.out.find("2 panel(s)") != std::string::npos);
    CHECK(res.out.find(std::to_string(578 + 242) + " points") != std::string::npos);
  }

  // CSV sorted by cohort_tag then patient_id
  std::ifstream csv(two / "embedding.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "patient_id,x,y,outcome,cohort_tag");
  std::string prev_key;
  long rows = 0;
  while (std::getline(csv, line)) {
    const auto last_comma = line.rfind(',');
    const std::string tag = line.substr(last_comma + 1);
    const std::string id = line.substr(0, line.find(','));
    const std::string key = tag + "|" + id;
    CHECK(prev_key <= key);
    prev_key = key;
    ++rows;
  }
  CHECK(rows == 578 + 242);
}

TEST_CASE("usage errors exit 1, data errors exit 2, with one-line diagnostics") {
  CHECK(run({"no_such_command"}).code == 1);
  CHECK(run({"train"}).code == 1);  // missing required cohort/schema

  const CliResult missing = run({"prepare", "--cohort", "/nonexistent.jsonl",
                                 "--schema", "/nonexistent.json", "--out", "/tmp"});
  CHECK(missing.code == 2);
  CHECK(count_lines(missing.err) == 1);
  CHECK(missing.err.rfind("timeagg:", 0) == 0);

  const fs::path dir = fresh_dir("badline");
  {
    std::ofstream bad(dir / "cohort.jsonl");
    bad << "{broken\n";
    std::ofstream schema(dir / "schema.json");
    schema << R"([{"name":"cdai","kind":"continuous"}])";
  }
  const CliResult malformed = run({"prepare", "--cohort", (dir / "cohort.jsonl").string(),
                                   "--schema", (dir / "schema.json").string(), "--out",
                                   dir.string()});
  CHECK(malformed.code == 2);
  CHECK(count_lines(malformed.err) == 1);
}

TEST_CASE("help exits zero") {
  const CliResult res = run({"--help"});
  CHECK(res.code == 0);
  CHECK(res.out.find("synth") != std::string::npos);
}
