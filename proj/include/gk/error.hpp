#pragma once

#include <stdexcept>
#include <string>

namespace gk {

/// Bad caller input: shape mismatches, empty inputs, invalid hyperparameters.
class InputError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (factorization failure, invalid covariance).
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class DatasetErrorKind {
    Missing,
    Malformed,
    Truncated,
    HashMismatch,
    IndexOutOfRange,
    Inconsistent,
};

const char* to_string(DatasetErrorKind kind);

/// Problem with an on-disk dataset; always names the offending file.
class DatasetError : public std::runtime_error {
  public:
    DatasetError(DatasetErrorKind kind, std::string file, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " [" + file + "]: " + what),
          kind_(kind),
          file_(std::move(file)) {}

    DatasetErrorKind kind() const noexcept { return kind_; }
    const std::string& file() const noexcept { return file_; }

  private:
    DatasetErrorKind kind_;
    std::string file_;
};

inline const char* to_string(DatasetErrorKind kind) {
    switch (kind) {
    case DatasetErrorKind::Missing: return "missing file";
    case DatasetErrorKind::Malformed: return "malformed file";
    case DatasetErrorKind::Truncated: return "truncated file";
    case DatasetErrorKind::HashMismatch: return "hash mismatch";
    case DatasetErrorKind::IndexOutOfRange: return "index out of range";
    case DatasetErrorKind::Inconsistent: return "inconsistent dataset";
    }
    return "dataset error";
}

}  // namespace gk
