#pragma once

#include <stdexcept>
#include <string>

namespace physgrid {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate an operation's preconditions.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Tensor extents do not conform to the operation.
class ShapeError : public UsageError {
public:
    using UsageError::UsageError;
};

/// Input data is malformed, inconsistent or unreadable.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class BadMagicError : public DataError {
public:
    using DataError::DataError;
};

class BadVersionError : public DataError {
public:
    using DataError::DataError;
};

class TruncatedError : public DataError {
public:
    using DataError::DataError;
};

/// A computation produced NaN/Inf, diverged, or a solve was singular.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace physgrid
