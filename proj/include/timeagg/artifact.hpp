#pragma once

#include <string>

#include "timeagg/model.hpp"
#include "timeagg/tpe.hpp"

namespace timeagg {

inline constexpr int kArtifactFormatVersion = 1;

/// Model artifact: format-versioned JSON holding the architecture kind,
/// hyperparameters, schema, standardization stats, weight arrays (row-major,
/// full precision) and training history. Reloading reproduces predictions
/// bitwise.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

/// Study log: JSON-Lines, one trial per line.
void save_study_log(const StudyResult& study, const std::string& path);

/// Best-trial JSON (hyperparams + objective + seed).
void save_best_trial(const Trial& trial, const std::string& path);
Trial load_best_trial(const std::string& path);

/// Standalone standardization stats (diagnostic output of `prepare`).
void save_stats(const StandardizationStats& stats, const Schema& schema,
                const std::string& path);

}  // namespace timeagg
