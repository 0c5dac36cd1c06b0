#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calib {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A value outside the domain of an operation (score > 1, T <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public DomainError {
public:
    using DomainError::DomainError;
};

class InsufficientDataError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Score sets that must line up position by position do not.
class AlignmentError : public Error {
public:
    using Error::Error;
};

class SerializationError : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

class ReportError : public Error {
public:
    using Error::Error;
};

}  // namespace calib
