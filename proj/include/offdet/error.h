#pragma once

#include <stdexcept>
#include <string>

namespace offdet {

// Malformed or inconsistent input data (bad TSV rows, unknown ids, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated an operation's precondition or gave a bad configuration.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace offdet
