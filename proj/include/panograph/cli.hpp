#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace panograph::cli {

/// Runs one pipeline stage: synth, reassign, features, train, eval or gradcheck.
/// Returns 0 on success, 1 on runtime failures and 2 on usage errors.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, char** argv);

}  // namespace panograph::cli
