#pragma once

#include <stdexcept>
#include <string>

namespace pc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of distributions, configurations or objectives disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A dense table or an enumerated joint space exceeds its hard cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside its allowed range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed DIMACS / NK text.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A Monte-Carlo cell has no samples and no fallback was requested.
class EmptyCellError : public Error {
 public:
  using Error::Error;
};

}  // namespace pc
