#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace membrane_pme {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative density, ε ≤ 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Degenerate or inconsistent geometry.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration. `path` points into the JSON document when known.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    explicit ConfigError(const std::string& what) : ConfigError(std::string{}, what) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// An operation was called on an object it does not apply to.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    NumericError(const std::string& what, long cell = -1) : Error(what), cell_(cell) {}
    long cell() const noexcept { return cell_; }

private:
    long cell_;
};

/// A time step could not be completed. Carries the Newton residual history when relevant.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, std::vector<double> trace = {})
        : Error(what), trace_(std::move(trace)) {}
    const std::vector<double>& residual_trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace membrane_pme
