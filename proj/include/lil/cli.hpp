#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lil {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,
    kExitNumeric = 3,
    kExitIo = 4,
};

/// Runs one command (gen-data, train, attack, report). `args` excludes the
/// program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lil
