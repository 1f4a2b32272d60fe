#pragma once

#include <iosfwd>
#include <string>

#include "thermobound/cli/config.hpp"

namespace thermo::cli {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // configuration / validation failure
inline constexpr int kExitNumeric = 3;  // solver, convergence, or estimation failure
inline constexpr int kExitIo = 4;       // file system failure

// Execute a validated configuration.  Relative output paths are joined with
// output_dir when it is nonempty.  Progress lines go to log unless quiet.
// Throws the library error types on failure.
void run(const RunConfig& cfg, const std::string& output_dir, bool quiet, std::ostream& log);

// Full pipeline for a config file: load, parse, validate, run; maps errors
// to exit codes and prints a machine-readable error JSON to err.
int run_config_file(const std::string& config_path, const std::string& output_dir, bool quiet,
                    std::ostream& log, std::ostream& err);

}  // namespace thermo::cli
