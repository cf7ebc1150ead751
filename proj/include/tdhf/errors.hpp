#pragma once

#include <stdexcept>

namespace tdhf {

/// Invalid user configuration or input data (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Instability or non-finite values during a computation (exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Container or file access failure (exit code 4).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tdhf
