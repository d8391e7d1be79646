#pragma once

#include <string>

#include "timeagg/cohort.hpp"

namespace timeagg {

// File formats:
//  - schema: JSON array of {"name": str, "kind": "continuous"|"binary"}
//  - cohort: JSON-Lines, one patient per line:
//      {"id": str, "outcome": "controlled"|"uncontrolled",
//       "visits": [{"day": int, "obs": {name: number}}]}
//  - grids: CSV with header patient_id,window,<variable names...>,
//    one row per (patient, window).

Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

Cohort load_cohort(const std::string& cohort_path, const std::string& schema_path);
void save_cohort(const Cohort& cohort, const std::string& cohort_path);

void export_grids_csv(const GridSet& set, const std::string& path);

}  // namespace timeagg
