#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grove {

// Invalid flags or configuration (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A genotype cell outside {0, 1, 2}.
class GenotypeError : public DataError {
 public:
  GenotypeError(const std::string& what, std::size_t index) : DataError(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Unreadable, corrupted or incompatible forest file (CLI exit code 3).
class ForestFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when no sample is out-of-bag in any tree.
class NoOobDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace grove
