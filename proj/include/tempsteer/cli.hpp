#pragma once

// Command-line entry point. Every subcommand writes into a staging directory
// next to its --out target, adds run_manifest.json and renames it into place.

#include <string>
#include <vector>

namespace tempsteer::cli {

inline constexpr const char * kToolVersion = "tempsteer 0.1.0";
inline constexpr const char * kOutRootEnv  = "TEMPSTEER_OUT_ROOT";

// Exit codes: 0 ok, 2 usage, 3 data / invariant failure, 4 unexpected.
int dispatch(int argc, const char * const * argv);
int dispatch(const std::vector<std::string> & args); // args[0] is the program name

} // namespace tempsteer::cli
