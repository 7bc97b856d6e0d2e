#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace identiface {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 for usage errors and 1 for runtime failures.
int cli_run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace identiface
