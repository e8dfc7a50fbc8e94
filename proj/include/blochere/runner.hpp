// Subcommand pipelines: each writes its CSV and JSON outputs plus
// manifest.cfg into the output directory.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "blochere/config.hpp"

namespace blochere {

inline constexpr int kSchemaVersion = 1;

/// Runs the configured pipeline into out_dir (created if missing) and returns
/// the written file names. Text meant for the terminal goes to `console`.
std::vector<std::string> run(const RunConfig& config, const std::string& out_dir, std::ostream& console);

/// Output files and CSV columns of a subcommand, for --help.
std::string output_help(Command command);

}  // namespace blochere
