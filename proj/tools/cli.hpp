#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aeromine::cli {

/// Runs one `aeromine` invocation. `args` excludes the program name.
/// Exit codes: 0 success, 1 runtime failure, 2 bad flags, 3 invalid configuration.
/// Failures print one JSON line to `err`.
int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace aeromine::cli
