#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradeflow {

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "GRADEFLOW_OUT";

/// Command-line entry point. Returns 0 on success, 1 when a library
/// operation fails and 2 for usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gradeflow
