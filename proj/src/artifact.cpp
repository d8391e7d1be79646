#include "timeagg/artifact.hpp"

#include <fstream>
#include <json.hpp>

#include "timeagg/errors.hpp"

namespace timeagg {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError(path + ": malformed JSON");
  return j;
}

json schema_to_json(const Schema& schema) {
  json out = json::array();
  for (const auto& v : schema.variables) {
    out.push_back({{"name", v.name},
                   {"kind", v.kind == VarKind::Continuous ? "continuous" : "binary"}});
  }
  return out;
}

Schema schema_from_json(const json& j) {
  Schema schema;
  for (const auto& item : j) {
    VariableSpec spec;
    spec.name = item.at("name").get<std::string>();
    spec.kind = item.at("kind").get<std::string>() == "binary" ? VarKind::Binary
                                                               : VarKind::Continuous;
    spec.column_index = schema.size();
    schema.variables.push_back(std::move(spec));
  }
  schema.validate();
  return schema;
}

json hp_to_json(const HyperParams& hp) {
  return {{"units_input", hp.units_input}, {"units_agg", hp.units_agg},
          {"units_dense", hp.units_dense}, {"l1", hp.l1},
          {"l2", hp.l2},                   {"dropout", hp.dropout},
          {"conv_kernel", hp.conv_kernel}};
}

HyperParams hp_from_json(const json& j) {
  HyperParams hp;
  hp.units_input = j.at("units_input").get<int>();
  hp.units_agg = j.at("units_agg").get<int>();
  hp.units_dense = j.at("units_dense").get<int>();
  hp.l1 = j.at("l1").get<double>();
  hp.l2 = j.at("l2").get<double>();
  hp.dropout = j.at("dropout").get<double>();
  if (j.contains("conv_kernel")) hp.conv_kernel = j.at("conv_kernel").get<int>();
  hp.validate();
  return hp;
}

json stats_to_json(const StandardizationStats& stats, const Schema& schema) {
  json out = json::array();
  for (int f = 0; f < schema.size(); ++f) {
    const auto& vs = stats.per_variable.at(f);
    out.push_back({{"name", schema.at(f).name},
                   {"mean", vs.mean},
                   {"stddev", vs.stddev},
                   {"count", vs.count}});
  }
  return out;
}

StandardizationStats stats_from_json(const json& j) {
  StandardizationStats stats;
  for (const auto& item : j) {
    StandardizationStats::VarStats vs;
    vs.mean = item.at("mean").get<double>();
    vs.stddev = item.at("stddev").get<double>();
    vs.count = item.at("count").get<long>();
    stats.per_variable.push_back(vs);
  }
  return stats;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  json weights = json::array();
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    const nn::Matrix& w = model.weights[i];
    json data = json::array();
    for (long r = 0; r < w.rows(); ++r) {
      for (long c = 0; c < w.cols(); ++c) data.push_back(w(r, c));
    }
    weights.push_back({{"name", model.weight_names.at(i)},
                       {"rows", w.rows()},
                       {"cols", w.cols()},
                       {"data", std::move(data)}});
  }

  json history = json::array();
  for (const auto& e : model.history) {
    history.push_back({{"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  }

  const json j = {{"format_version", kArtifactFormatVersion},
                  {"kind", to_string(model.kind)},
                  {"hyperparams", hp_to_json(model.hp)},
                  {"window", {{"window_len", model.window_cfg.window_len},
                              {"n_windows", model.window_cfg.n_windows}}},
                  {"schema", schema_to_json(model.schema)},
                  {"stats", stats_to_json(model.stats, model.schema)},
                  {"weights", std::move(weights)},
                  {"history", std::move(history)},
                  {"best_epoch", model.best_epoch},
                  {"best_val_loss", model.best_val_loss}};
  std::ofstream out = open_out(path);
  out << j.dump(1) << "\n";
}

TrainedModel load_model(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() != kArtifactFormatVersion) {
    throw DataError(path + ": unsupported artifact format version");
  }
  TrainedModel model;
  model.kind = arch_from_string(j.at("kind").get<std::string>());
  model.hp = hp_from_json(j.at("hyperparams"));
  model.window_cfg.window_len = j.at("window").at("window_len").get<int>();
  model.window_cfg.n_windows = j.at("window").at("n_windows").get<int>();
  model.schema = schema_from_json(j.at("schema"));
  model.stats = stats_from_json(j.at("stats"));
  for (const auto& item : j.at("weights")) {
    const long rows = item.at("rows").get<long>();
    const long cols = item.at("cols").get<long>();
    const auto& data = item.at("data");
    if (static_cast<long>(data.size()) != rows * cols) {
      throw DataError(path + ": weight size mismatch");
    }
    nn::Matrix w(rows, cols);
    long idx = 0;
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) w(r, c) = data.at(idx++).get<double>();
    }
    model.weight_names.push_back(item.at("name").get<std::string>());
    model.weights.push_back(std::move(w));
  }
  for (const auto& item : j.at("history")) {
    model.history.push_back({item.at("train_loss").get<double>(),
                             item.at("val_loss").get<double>()});
  }
  model.best_epoch = j.at("best_epoch").get<int>();
  model.best_val_loss = j.at("best_val_loss").get<double>();
  return model;
}

namespace {

json trial_to_json(const Trial& trial) {
  return {{"hyperparams", hp_to_json(trial.hp)},
          {"objective", trial.complete ? json(trial.objective) : json()},
          {"seed", trial.seed},
          {"status", trial.complete ? "complete" : "failed"}};
}

}  // namespace

void save_study_log(const StudyResult& study, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& t : study.trials) out << trial_to_json(t).dump() << "\n";
}

void save_best_trial(const Trial& trial, const std::string& path) {
  std::ofstream out = open_out(path);
  out << trial_to_json(trial).dump(1) << "\n";
}

Trial load_best_trial(const std::string& path) {
  const json j = read_json_file(path);
  Trial trial;
  trial.hp = hp_from_json(j.at("hyperparams"));
  trial.complete = j.at("status").get<std::string>() == "complete";
  trial.objective = trial.complete ? j.at("objective").get<double>()
                                   : std::numeric_limits<double>::infinity();
  trial.seed = j.at("seed").get<std::uint64_t>();
  return trial;
}

void save_stats(const StandardizationStats& stats, const Schema& schema,
                const std::string& path) {
  std::ofstream out = open_out(path);
  out << stats_to_json(stats, schema).dump(1) << "\n";
}

}  // namespace timeagg
