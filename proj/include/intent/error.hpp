#pragma once

#include <stdexcept>
#include <string>

namespace intent {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes (see tools/cli.cpp).
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not agree.
class ShapeError : public Error {
  public:
    using Error::Error;
};

// A scalar argument is outside its documented domain.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

// Corpus or model file content is malformed or inconsistent.
class DataError : public Error {
  public:
    using Error::Error;
};

// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
  public:
    using Error::Error;
};

} // namespace intent
