#pragma once

#include <stdexcept>
#include <string>

namespace vsumm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or schema.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Failure reading or writing a stream or file.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vsumm
