#include "timeagg/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "timeagg/errors.hpp"

namespace timeagg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int Schema::index_of(const std::string& name) const {
  for (const auto& v : variables) {
    if (v.name == name) return v.column_index;
  }
  return -1;
}

bool Schema::operator==(const Schema& other) const {
  if (variables.size() != other.variables.size()) return false;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name != other.variables[i].name ||
        variables[i].kind != other.variables[i].kind ||
        variables[i].column_index != other.variables[i].column_index) {
      return false;
    }
  }
  return true;
}

void Schema::validate() const {
  std::set<std::string> names;
  for (int i = 0; i < size(); ++i) {
    const auto& v = variables[i];
    if (!names.insert(v.name).second) {
      throw DataError("schema: duplicate variable name '" + v.name + "'");
    }
    if (v.column_index != i) {
      throw DataError("schema: column_index of '" + v.name +
                      "' must be " + std::to_string(i));
    }
  }
}

void Cohort::validate() const {
  schema.validate();
  for (const auto& p : patients) {
    if (p.visits.empty()) {
      throw DataError("patient '" + p.id + "': no visits");
    }
    int prev_day = -1;
    for (const auto& v : p.visits) {
      if (v.day < 0) throw DataError("patient '" + p.id + "': negative visit day");
      if (v.day <= prev_day) {
        throw DataError("patient '" + p.id + "': visits not strictly sorted by day");
      }
      prev_day = v.day;
      for (const auto& [name, value] : v.observations) {
        const int col = schema.index_of(name);
        if (col < 0) {
          throw DataError("patient '" + p.id + "': unknown variable '" + name + "'");
        }
        if (!std::isfinite(value)) {
          throw DataError("patient '" + p.id + "': non-finite value for '" + name + "'");
        }
        if (schema.at(col).kind == VarKind::Binary && value != 0.0 && value != 1.0) {
          throw DataError("patient '" + p.id + "': binary variable '" + name +
                          "' must be 0 or 1");
        }
      }
    }
    if (p.index_day != p.visits.back().day) {
      throw DataError("patient '" + p.id + "': index_day must equal the last visit day");
    }
  }
}

double Cohort::prevalence() const {
  if (patients.empty()) return 0.0;
  long n_pos = 0;
  for (const auto& p : patients) {
    if (p.outcome == Outcome::Uncontrolled) ++n_pos;
  }
  return static_cast<double>(n_pos) / static_cast<double>(patients.size());
}

std::vector<int> assign_windows(const Patient& patient, const WindowConfig& cfg) {
  const int W = cfg.n_windows;
  const int L = cfg.window_len;
  std::vector<int> out(patient.visits.size(), kDiscarded);
  for (std::size_t i = 0; i < patient.visits.size(); ++i) {
    const int day = patient.visits[i].day;
    // window w covers (index_day - (W-w)*L, index_day - (W-w-1)*L]
    for (int w = 0; w < W; ++w) {
      const int lo = patient.index_day - (W - w) * L;
      const int hi = patient.index_day - (W - w - 1) * L;
      if (day > lo && day <= hi) {
        out[i] = w;
        break;
      }
    }
  }
  return out;
}

AggregatedRow aggregate_window(const std::vector<const Visit*>& visits_in_window,
                               const Schema& schema) {
  const int F = schema.size();
  AggregatedRow row;
  row.values = Eigen::RowVectorXd::Constant(F, kNaN);
  row.observed.assign(F, false);
  std::vector<int> latest_day(F, std::numeric_limits<int>::min());
  for (const Visit* v : visits_in_window) {
    for (const auto& [name, value] : v->observations) {
      const int col = schema.index_of(name);
      if (col < 0) throw DataError("aggregate_window: unknown variable '" + name + "'");
      if (v->day >= latest_day[col]) {
        latest_day[col] = v->day;
        row.values(col) = value;
        row.observed[col] = true;
      }
    }
  }
  return row;
}

WindowGrid windowize(const Patient& patient, const Schema& schema,
                     const WindowConfig& cfg) {
  const int W = cfg.n_windows;
  const int F = schema.size();
  const std::vector<int> assignment = assign_windows(patient, cfg);

  std::vector<std::vector<const Visit*>> buckets(W);
  for (std::size_t i = 0; i < patient.visits.size(); ++i) {
    if (assignment[i] != kDiscarded) buckets[assignment[i]].push_back(&patient.visits[i]);
  }

  WindowGrid grid;
  grid.patient_id = patient.id;
  grid.values = Eigen::MatrixXd::Constant(W, F, kNaN);
  grid.mask.setConstant(W, F, false);
  grid.outcome = patient.outcome == Outcome::Uncontrolled ? 1 : 0;
  for (int w = 0; w < W; ++w) {
    const AggregatedRow row = aggregate_window(buckets[w], schema);
    grid.values.row(w) = row.values;
    for (int f = 0; f < F; ++f) grid.mask(w, f) = row.observed[f];
  }
  return grid;
}

StandardizationStats StandardizationStats::fit(
    const std::vector<WindowGrid>& train_grids, const Schema& schema) {
  const int F = schema.size();
  StandardizationStats stats;
  stats.per_variable.assign(F, {});
  std::vector<double> sum(F, 0.0), sum_sq(F, 0.0);
  for (const auto& g : train_grids) {
    for (int w = 0; w < g.values.rows(); ++w) {
      for (int f = 0; f < F; ++f) {
        if (!g.mask(w, f)) continue;
        const double x = g.values(w, f);
        sum[f] += x;
        sum_sq[f] += x * x;
        ++stats.per_variable[f].count;
      }
    }
  }
  for (int f = 0; f < F; ++f) {
    auto& vs = stats.per_variable[f];
    if (vs.count > 0) {
      vs.mean = sum[f] / static_cast<double>(vs.count);
      const double var =
          std::max(0.0, sum_sq[f] / static_cast<double>(vs.count) - vs.mean * vs.mean);
      vs.stddev = std::sqrt(var);
    }
    if (vs.stddev < 1e-12) vs.stddev = 1.0;  // constant feature
  }
  return stats;
}

WindowGrid impute(const WindowGrid& grid, const StandardizationStats& stats,
                  const Schema& schema) {
  const int W = static_cast<int>(grid.values.rows());
  const int F = schema.size();
  if (static_cast<int>(stats.per_variable.size()) != F) {
    throw DataError("impute: stats do not cover the schema");
  }
  WindowGrid out = grid;
  for (int f = 0; f < F; ++f) {
    // forward-fill from earlier windows
    for (int w = 1; w < W; ++w) {
      if (std::isnan(out.values(w, f)) && !std::isnan(out.values(w - 1, f))) {
        out.values(w, f) = out.values(w - 1, f);
      }
    }
    const double fill = schema.at(f).kind == VarKind::Continuous
                            ? stats.per_variable[f].mean
                            : 0.0;
    for (int w = 0; w < W; ++w) {
      if (std::isnan(out.values(w, f))) out.values(w, f) = fill;
    }
  }
  return out;
}

WindowGrid standardize(const WindowGrid& grid, const StandardizationStats& stats,
                       const Schema& schema) {
  const int F = schema.size();
  if (static_cast<int>(stats.per_variable.size()) != F) {
    throw DataError("standardize: stats do not cover the schema");
  }
  WindowGrid out = grid;
  for (int f = 0; f < F; ++f) {
    if (schema.at(f).kind != VarKind::Continuous) continue;
    const auto& vs = stats.per_variable[f];
    for (int w = 0; w < out.values.rows(); ++w) {
      out.values(w, f) = (out.values(w, f) - vs.mean) / vs.stddev;
    }
  }
  return out;
}

std::vector<Cohort> stratified_split(const Cohort& cohort,
                                     const std::vector<double>& fractions,
                                     std::uint64_t seed) {
  const int k = static_cast<int>(fractions.size());
  if (k == 0) throw DataError("stratified_split: no fractions given");
  double total = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw DataError("stratified_split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DataError("stratified_split: fractions must sum to 1");
  }

  std::vector<Cohort> splits(k);
  for (auto& s : splits) s.schema = cohort.schema;

  Rng rng(seed);
  for (const Outcome cls : {Outcome::Controlled, Outcome::Uncontrolled}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
      if (cohort.patients[i].outcome == cls) members.push_back(i);
    }
    if (members.empty()) continue;
    if (static_cast<int>(members.size()) < k) {
      throw DataError("stratified_split: outcome class too small to populate every split");
    }
    rng.shuffle(members);

    // largest-remainder apportionment; ties broken by split order
    const auto n = static_cast<double>(members.size());
    std::vector<long> counts(k);
    std::vector<std::pair<double, int>> rema(k);
    long assigned = 0;
    for (int s = 0; s < k; ++s) {
      const double quota = n * fractions[s];
      counts[s] = static_cast<long>(std::floor(quota));
      rema[s] = {quota - std::floor(quota), s};
      assigned += counts[s];
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    for (long r = 0; r < static_cast<long>(members.size()) - assigned; ++r) {
      ++counts[rema[r % k].second];
    }

    std::size_t cursor = 0;
    for (int s = 0; s < k; ++s) {
      for (long c = 0; c < counts[s]; ++c) {
        splits[s].patients.push_back(cohort.patients[members[cursor++]]);
      }
    }
  }
  return splits;
}

std::vector<int> GridSet::labels() const {
  std::vector<int> y(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) y[i] = grids[i].outcome;
  return y;
}

bool GridSet::both_classes_present() const {
  bool pos = false, neg = false;
  for (const auto& g : grids) (g.outcome ? pos : neg) = true;
  return pos && neg;
}

PreparedData prepare(const std::vector<Cohort>& split_cohorts,
                     const WindowConfig& cfg, int train_index) {
  if (split_cohorts.empty()) throw DataError("prepare: no cohorts given");
  if (train_index < 0 || train_index >= static_cast<int>(split_cohorts.size())) {
    throw DataError("prepare: train_index out of range");
  }
  PreparedData out;
  std::vector<std::vector<WindowGrid>> raw(split_cohorts.size());
  for (std::size_t s = 0; s < split_cohorts.size(); ++s) {
    const auto& cohort = split_cohorts[s];
    raw[s].reserve(cohort.patients.size());
    for (const auto& p : cohort.patients) raw[s].push_back(windowize(p, cohort.schema, cfg));
  }
  const Schema& schema = split_cohorts[train_index].schema;
  out.stats = StandardizationStats::fit(raw[train_index], schema);
  for (std::size_t s = 0; s < split_cohorts.size(); ++s) {
    GridSet set;
    set.schema = split_cohorts[s].schema;
    set.window_cfg = cfg;
    set.grids.reserve(raw[s].size());
    for (const auto& g : raw[s]) {
      set.grids.push_back(standardize(impute(g, out.stats, set.schema), out.stats, set.schema));
    }
    out.splits.push_back(std::move(set));
  }
  return out;
}

PreparedData split_and_prepare(const Cohort& cohort,
                               const std::vector<double>& fractions,
                               std::uint64_t seed, const WindowConfig& cfg) {
  return prepare(stratified_split(cohort, fractions, seed), cfg, 0);
}

GridSet prepare_with_stats(const Cohort& cohort, const StandardizationStats& stats,
                           const WindowConfig& cfg) {
  GridSet set;
  set.schema = cohort.schema;
  set.window_cfg = cfg;
  set.grids.reserve(cohort.patients.size());
  for (const auto& p : cohort.patients) {
    const WindowGrid raw = windowize(p, cohort.schema, cfg);
    set.grids.push_back(standardize(impute(raw, stats, cohort.schema), stats, cohort.schema));
  }
  return set;
}

std::pair<Cohort, Cohort> merge_with_holdout(const Cohort& a, const Cohort& b,
                                             double holdout_fraction,
                                             std::uint64_t seed) {
  if (!(a.schema == b.schema)) throw DataError("merge_with_holdout: schema mismatch");
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
    throw DataError("merge_with_holdout: fraction must be in (0,1)");
  }
  Cohort merged;
  merged.schema = a.schema;
  merged.patients = a.patients;
  merged.patients.insert(merged.patients.end(), b.patients.begin(), b.patients.end());
  auto splits = stratified_split(merged, {1.0 - holdout_fraction, holdout_fraction}, seed);
  return {std::move(splits[0]), std::move(splits[1])};
}

}  // namespace timeagg
