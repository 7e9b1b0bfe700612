#pragma once

#include <stdexcept>
#include <string>

namespace ag {

// Error taxonomy mirrors the CLI / C API status codes:
//   UsageError -> 1, DataError -> 2, NumericError -> 3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ag
