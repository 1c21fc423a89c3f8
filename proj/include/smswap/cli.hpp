#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "smswap/errors.hpp"

namespace smswap::cli {

enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,
  kNumericalFailure = 2,
  kIoFailure = 3,
};

/// Exit status a library error maps to.
int exit_code_for(ErrorKind kind) noexcept;

/// Runs one command (`validate`, `price`, `simulate`, `compare`); args
/// exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smswap::cli
