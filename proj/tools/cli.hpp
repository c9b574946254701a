#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace jumpsteer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

inline constexpr int kCsvSchema = 1;
inline constexpr int kEnvelopeSchema = 1;

inline constexpr std::string_view kSweepHeader = "eta,R,n,mode,S,stderr,term1,term2,seed,walltime_s";

// `args` excludes the program name. Results go to `out`, diagnostics and
// usage text to `err`.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int parse_and_dispatch(int argc, char** argv);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string version_string();

}  // namespace jumpsteer::cli
