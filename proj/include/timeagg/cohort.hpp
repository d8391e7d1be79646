#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "timeagg/rng.hpp"

namespace timeagg {

enum class VarKind { Continuous, Binary };

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::Continuous;
  int column_index = 0;
};

/// Ordered variable set; column_index of variables[i] is i.
struct Schema {
  std::vector<VariableSpec> variables;

  int size() const { return static_cast<int>(variables.size()); }
  int index_of(const std::string& name) const;
  const VariableSpec& at(int col) const { return variables.at(col); }
  bool operator==(const Schema& other) const;

  /// Throws DataError on duplicate names or non-contiguous column indices.
  void validate() const;
};

struct Visit {
  int day = 0;                              // days since the patient's first visit
  std::map<std::string, double> observations;  // partial: variable name -> value
};

enum class Outcome { Controlled, Uncontrolled };

struct Patient {
  std::string id;
  std::vector<Visit> visits;  // strictly ascending by day
  int index_day = 0;          // day of the final observed visit
  Outcome outcome = Outcome::Controlled;
};

struct Cohort {
  Schema schema;
  std::vector<Patient> patients;

  /// Consistency check of every stated invariant; throws DataError.
  void validate() const;
  double prevalence() const;  // fraction Uncontrolled
};

struct WindowConfig {
  int window_len = 100;
  int n_windows = 3;
};

/// Sentinel for visits older than the oldest window.
inline constexpr int kDiscarded = -1;

/// Window index per visit (aligned with patient.visits). Window w covers the
/// half-open interval (index_day - (W-w)*L, index_day - (W-w-1)*L]; the last
/// window contains the index visit.
std::vector<int> assign_windows(const Patient& patient, const WindowConfig& cfg = {});

/// Most-recent-value aggregation over one window. Returns the value row and
/// the observed mask; variables with no observation get mask=false, value=NaN.
struct AggregatedRow {
  Eigen::RowVectorXd values;
  std::vector<bool> observed;
};
AggregatedRow aggregate_window(const std::vector<const Visit*>& visits_in_window,
                               const Schema& schema);

struct WindowGrid {
  std::string patient_id;
  Eigen::MatrixXd values;  // W x F; NaN where mask is false until imputation
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // true = observed
  int outcome = 0;  // 1 = Uncontrolled
};

/// assign_windows + aggregate_window for every window of one patient.
WindowGrid windowize(const Patient& patient, const Schema& schema,
                     const WindowConfig& cfg = {});

/// Per-variable training statistics. Means/stds are over observed
/// (pre-imputation) aggregated values, pooled across windows.
struct StandardizationStats {
  struct VarStats {
    double mean = 0.0;
    double stddev = 1.0;  // clamped to 1 when below 1e-12
    long count = 0;
  };
  std::vector<VarStats> per_variable;  // aligned with schema columns

  static StandardizationStats fit(const std::vector<WindowGrid>& train_grids,
                                  const Schema& schema);
};

/// Forward-fill across windows, then train mean (continuous) / 0 (binary).
/// The mask is preserved unchanged.
WindowGrid impute(const WindowGrid& grid, const StandardizationStats& stats,
                  const Schema& schema);

/// (x - mean) / std for continuous cells; binary cells pass through.
WindowGrid standardize(const WindowGrid& grid, const StandardizationStats& stats,
                       const Schema& schema);

/// Seeded stratified split: per outcome class, shuffle then apportion by
/// largest-remainder rounding (fraction ties broken by split order).
std::vector<Cohort> stratified_split(const Cohort& cohort,
                                     const std::vector<double>& fractions,
                                     std::uint64_t seed);

/// A fully prepared split: windowized, imputed, standardized grids.
struct GridSet {
  Schema schema;
  WindowConfig window_cfg;
  std::vector<WindowGrid> grids;

  int size() const { return static_cast<int>(grids.size()); }
  std::vector<int> labels() const;
  bool both_classes_present() const;
};

struct PreparedData {
  StandardizationStats stats;  // fit on splits[train_index]
  std::vector<GridSet> splits;
};

/// Full pipeline over pre-split cohorts. Stats come from splits[train_index].
PreparedData prepare(const std::vector<Cohort>& split_cohorts,
                     const WindowConfig& cfg = {}, int train_index = 0);

/// stratified_split + prepare in one step.
PreparedData split_and_prepare(const Cohort& cohort,
                               const std::vector<double>& fractions,
                               std::uint64_t seed, const WindowConfig& cfg = {});

/// Pipeline with externally supplied stats (e.g. the stats stored inside a
/// model artifact) instead of refitting on a training split.
GridSet prepare_with_stats(const Cohort& cohort, const StandardizationStats& stats,
                           const WindowConfig& cfg = {});

/// Concatenate two cohorts and carve out a stratified holdout fraction for
/// checkpoint monitoring. Returns {fit, monitor}.
std::pair<Cohort, Cohort> merge_with_holdout(const Cohort& a, const Cohort& b,
                                             double holdout_fraction,
                                             std::uint64_t seed);

}  // namespace timeagg
