#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simulsa::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kBackend = 3;
inline constexpr int kIo = 4;

// Runs the command line (argv[0] included). Machine-readable results go to
// `out`; help and usage errors to `err`; logs to standard error.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace simulsa::cli
