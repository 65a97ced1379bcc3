#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scaling {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument is negative, non-finite, or otherwise outside its contract.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A well-formed request that makes no sense for the given profile (e.g. world
/// modelling on a per-observation CNN encoder).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A log or metric file could not be ingested. `line` is 1-based; 0 when the
/// failure is not tied to a single line.
class IngestError : public Error {
public:
    IngestError(const std::string& message, std::size_t line = 0, std::string field = {})
        : Error(line ? "line " + std::to_string(line) + ": " + message : message),
          line_(line), field_(std::move(field)) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Fewer than two model sizes reach the efficient frontier, so the frontier
/// method cannot estimate an allocation exponent. The parametric fit still can.
class FrontierUnderdetermined : public FitError {
public:
    using FitError::FitError;
};

/// Pearson R is undefined when either coordinate has zero variance.
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace scaling
