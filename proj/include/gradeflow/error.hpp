#pragma once

#include <stdexcept>
#include <string>

namespace gradeflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. size s > 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Linear system could not be factorized or solved to tolerance.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Unit-cell problem has no drag anywhere (pure fluid with zero floor).
class DegenerateCellError : public SingularSystemError {
public:
    using SingularSystemError::SingularSystemError;
};

/// Configuration or file content does not match its schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace gradeflow
