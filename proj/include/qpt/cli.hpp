#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "qpt/errors.hpp"

namespace qpt::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kData = 4, kNumerical = 5 };

class UsageError : public Error {
 public:
  using Error::Error;
};

int exit_code_for(const std::exception& e);

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qpt::cli
