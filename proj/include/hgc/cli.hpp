#pragma once

#include <string>
#include <vector>

namespace hgc::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit status: 0 success, 2 usage or configuration, 3 data or format,
/// 4 numerical (a fit that did not converge). Errors go to stderr.
int run(int argc, char** argv);

/// Same, with args[0] standing in for the program name.
int run(const std::vector<std::string>& args);

}  // namespace hgc::cli
