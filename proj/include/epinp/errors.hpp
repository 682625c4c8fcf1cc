#pragma once

#include <stdexcept>

namespace epinp {

// Error taxonomy mirrors the CLI exit-code contract: config errors exit 2,
// data errors exit 3, numerical failures exit 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contract violations by calling code (mismatched dimensions etc).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace epinp
