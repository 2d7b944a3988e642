#ifndef IMCP_ERRORS_HPP
#define IMCP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace imcp {

// Error categories map onto CLI exit codes:
//   IoError -> 1, ValidationError (incl. DecodeError) -> 2, NumericError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem / stream failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Caller handed us something that violates a precondition or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed serialized input (bad header, truncated payload, ...).
class DecodeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Non-finite values or other numerical breakdown.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace imcp

#endif
