#pragma once

#include <stdexcept>
#include <string>

namespace artdream {

// Root of the error hierarchy. The CLI maps ValidationError to exit code 1
// and IoError to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed persisted data (bad magic, truncated payload, broken schema).
class FormatError : public IoError {
public:
    using IoError::IoError;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NonFiniteError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace artdream
