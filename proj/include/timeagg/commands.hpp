#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "timeagg/config.hpp"

namespace timeagg {

// Pipeline commands. Each is a pure function of (config, input files): fixed
// seeds give byte-identical outputs. Summaries go to `out`.
void cmd_synth(const RunConfig& cfg, std::ostream& out);
void cmd_prepare(const RunConfig& cfg, std::ostream& out);
void cmd_tune(const RunConfig& cfg, std::ostream& out);
void cmd_train(const RunConfig& cfg, std::ostream& out);
void cmd_eval(const RunConfig& cfg, std::ostream& out);
void cmd_importance(const RunConfig& cfg, std::ostream& out);
void cmd_confusion(const RunConfig& cfg, std::ostream& out);

/// Full CLI entry: parses args (argv[0] excluded), dispatches, maps errors to
/// exit codes (0 ok, 1 usage, 2 data, 3 numeric).
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace timeagg
