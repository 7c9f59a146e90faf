#pragma once

#include <stdexcept>
#include <string>

namespace goldsci {

// Invalid input: out-of-domain arguments, inconsistent trial data or
// parameters. Maps to CLI exit code 2.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not deliver a result (no sign change in a root
// bracket, iteration cap hit, sample-size target unreachable). Maps to CLI
// exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested evaluation mode is not available for a method.
class UnsupportedMode : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace goldsci
