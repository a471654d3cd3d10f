#pragma once

#include <stdexcept>

namespace netred {

// Error taxonomy mirrored by the CLI exit codes (see tools/).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConnectivityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdmissibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace netred
