#pragma once

#include <stdexcept>
#include <string>

namespace zsar {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3.
// Shape mismatches and API misuse throw std::invalid_argument /
// std::logic_error and are mapped to a configuration error by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration: bad flag combinations, unresolvable paths.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (embedding tables, feature files,
// detection records, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-finite values, NaN losses, degenerate inputs.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace zsar
