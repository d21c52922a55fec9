#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace earscan::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kNumericError = 3,
    kInsufficientData = 4,
};

/// Runs one subcommand. `args` excludes the program name.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Flat `key = value` lines (# comments) turned into `--key value` arguments.
std::vector<std::string> config_arguments(const std::string& text);

}  // namespace earscan::cli
