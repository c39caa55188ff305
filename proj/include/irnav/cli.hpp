#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irnav {

/// Exit codes: 0 success, 2 invalid input, 3 missing or stale session state, 4 solver failure, 1 anything else.
/// Failures print {"error": ..., "code": ...} on `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace irnav
