#pragma once

#include <stdexcept>
#include <string>

namespace herdlab {

/// Base class for all herdlab runtime failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or inconsistent input data (CSV panels, manifests, schemas).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Parameter determination failed (degenerate data, out-of-range probabilities).
class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& msg) : Error(msg) {}
};

/// Simulation-time model violation.
class EngineError : public Error {
public:
    explicit EngineError(const std::string& msg) : Error(msg) {}
};

/// Numerical routine failed to converge.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// Filesystem / serialization failure.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace herdlab
