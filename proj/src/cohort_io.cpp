#include "timeagg/cohort_io.hpp"

#include <fstream>
#include <json.hpp>

#include "timeagg/errors.hpp"
#include "timeagg/format.hpp"

namespace timeagg {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError(where + ": malformed JSON");
  return j;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

Schema load_schema(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const json j = parse_json(text, path);
  if (!j.is_array()) throw DataError(path + ": schema must be a JSON array");
  Schema schema;
  int col = 0;
  for (const auto& item : j) {
    if (!item.contains("name") || !item.contains("kind")) {
      throw DataError(path + ": schema entries need 'name' and 'kind'");
    }
    VariableSpec spec;
    spec.name = item.at("name").get<std::string>();
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "continuous") {
      spec.kind = VarKind::Continuous;
    } else if (kind == "binary") {
      spec.kind = VarKind::Binary;
    } else {
      throw DataError(path + ": unknown variable kind '" + kind + "'");
    }
    spec.column_index = col++;
    schema.variables.push_back(std::move(spec));
  }
  schema.validate();
  return schema;
}

void save_schema(const Schema& schema, const std::string& path) {
  json j = json::array();
  for (const auto& v : schema.variables) {
    j.push_back({{"name", v.name},
                 {"kind", v.kind == VarKind::Continuous ? "continuous" : "binary"}});
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

Cohort load_cohort(const std::string& cohort_path, const std::string& schema_path) {
  Cohort cohort;
  cohort.schema = load_schema(schema_path);
  std::ifstream in = open_in(cohort_path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = cohort_path + ":" + std::to_string(line_no);
    const json j = parse_json(line, where);
    Patient p;
    if (!j.contains("id") || !j.contains("outcome") || !j.contains("visits")) {
      throw DataError(where + ": patient needs 'id', 'outcome', 'visits'");
    }
    p.id = j.at("id").get<std::string>();
    const std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "controlled") {
      p.outcome = Outcome::Controlled;
    } else if (outcome == "uncontrolled") {
      p.outcome = Outcome::Uncontrolled;
    } else {
      throw DataError(where + ": outcome must be 'controlled' or 'uncontrolled'");
    }
    for (const auto& jv : j.at("visits")) {
      Visit v;
      v.day = jv.at("day").get<int>();
      if (jv.contains("obs")) {
        for (const auto& [name, value] : jv.at("obs").items()) {
          if (!value.is_number()) throw DataError(where + ": non-numeric observation");
          v.observations[name] = value.get<double>();
        }
      }
      p.visits.push_back(std::move(v));
    }
    if (p.visits.empty()) throw DataError(where + ": patient has no visits");
    p.index_day = p.visits.back().day;
    cohort.patients.push_back(std::move(p));
  }
  cohort.validate();
  return cohort;
}

void save_cohort(const Cohort& cohort, const std::string& cohort_path) {
  std::ofstream out = open_out(cohort_path);
  for (const auto& p : cohort.patients) {
    json visits = json::array();
    for (const auto& v : p.visits) {
      json obs = json::object();
      for (const auto& [name, value] : v.observations) obs[name] = value;
      visits.push_back({{"day", v.day}, {"obs", obs}});
    }
    const json j = {{"id", p.id},
                    {"outcome", p.outcome == Outcome::Uncontrolled ? "uncontrolled"
                                                                   : "controlled"},
                    {"visits", visits}};
    out << j.dump() << "\n";
  }
}

void export_grids_csv(const GridSet& set, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "patient_id,window";
  for (const auto& v : set.schema.variables) out << "," << v.name;
  out << "\n";
  for (const auto& g : set.grids) {
    for (int w = 0; w < g.values.rows(); ++w) {
      out << g.patient_id << "," << w;
      for (int f = 0; f < g.values.cols(); ++f) out << "," << format_double(g.values(w, f));
      out << "\n";
    }
  }
}

}  // namespace timeagg
