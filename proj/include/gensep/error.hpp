#pragma once

#include <stdexcept>
#include <string>

namespace gensep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad config, schema mismatch, unparsable file, bad arguments.
class InputError : public Error {
public:
    using Error::Error;
};

class SchemaError : public InputError {
public:
    using InputError::InputError;
};

class ArgumentError : public InputError {
public:
    using InputError::InputError;
};

/// A numerical routine could not produce a usable answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DegenerateVariableError : public NumericalError {
public:
    DegenerateVariableError(const std::string& column, const std::string& what)
        : NumericalError(what), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, double achieved)
        : NumericalError(what), achieved_(achieved) {}
    /// Largest coefficient change in the final sweep.
    double achieved_tolerance() const noexcept { return achieved_; }

private:
    double achieved_;
};

class PathExplosionError : public NumericalError {
public:
    PathExplosionError(const std::string& what, std::size_t cap)
        : NumericalError(what), cap_(cap) {}
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

}  // namespace gensep

namespace gensep {

/// No usable separating set exists under the declared constraints.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

}  // namespace gensep
