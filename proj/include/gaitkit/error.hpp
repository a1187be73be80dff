#ifndef GAITKIT_ERROR_HPP
#define GAITKIT_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gaitkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A configuration value is outside its valid range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Horizontal acceleration has no dominant direction.
class AmbiguousDirectionError : public Error {
public:
    using Error::Error;
};

/// No stride periodicity found in a bout.
class NoCadenceError : public Error {
public:
    using Error::Error;
};

class EmptySetError : public Error {
public:
    using Error::Error;
};

/// Parameter values outside the model's support.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The sampler failed to move; the message says what to try.
class DiagnosticsError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace gaitkit

#endif
