#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace logitcalib::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand (fit, calibrate, predict, evaluate, synth). Normal
// output goes to `out`, diagnostics to `err`; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace logitcalib::cli
