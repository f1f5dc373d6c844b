#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace outbreak {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or token.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Sizes of two aligned inputs disagree.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Autocorrelation requested on a field with zero variance.
class ConstantField : public Error {
 public:
  using Error::Error;
};

/// Fewer than three non-island regions remain for autocorrelation.
class InsufficientRegions : public Error {
 public:
  using Error::Error;
};

/// Model and data disagree on feature names or count.
class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

/// Non-fatal conditions reported back to the caller.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace outbreak
