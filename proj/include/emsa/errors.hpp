#pragma once

#include <stdexcept>
#include <string>

namespace emsa {

// Bad command line or configuration. Maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data (corpus files, model files, traces). Maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A violated internal invariant. Maps to exit code 3.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace emsa
