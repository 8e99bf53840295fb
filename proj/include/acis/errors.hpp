#pragma once

#include <stdexcept>
#include <string>

namespace acis {

/// Base for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing, unreadable or unwritable file.
class IoError : public Error {
public:
    using Error::Error;
};

/// File content that does not match the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input that is well-formed but violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace acis
