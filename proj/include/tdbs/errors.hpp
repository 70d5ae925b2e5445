#pragma once

#include <stdexcept>
#include <string>

namespace tdbs {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class InvalidIntervalError : public Error {
public:
    using Error::Error;
};

class InvalidScheduleError : public Error {
public:
    using Error::Error;
};

class DegenerateVolatilityError : public Error {
public:
    using Error::Error;
};

/// Raised when the diffusion matrix loses positive definiteness.
/// Carries the (market) time at which the violation was detected.
class EllipticityError : public Error {
public:
    EllipticityError(const std::string& what, double time)
        : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateDomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Linear solver did not reach its tolerance within the iteration cap.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class InvalidOperatorError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace tdbs
