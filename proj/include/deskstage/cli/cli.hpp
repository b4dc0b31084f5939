#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deskstage::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (argv[0] is the program name). Returns the process
/// exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace deskstage::cli
