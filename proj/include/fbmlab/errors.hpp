#pragma once

#include <stdexcept>
#include <string>

namespace fbm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scalar argument outside the domain of a function (negative t, NaN, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A point, ball or sphere does not fit inside the grid box.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Inputs that are individually valid but inconsistent with each other.
class ContractError : public Error {
public:
    using Error::Error;
};

/// A diagnostic was requested outside the setting where it is defined.
class UnavailableError : public ContractError {
public:
    using ContractError::ContractError;
};

/// Scenario file does not match the schema.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Iterative linear solver hit its iteration cap.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Energy became non-finite during minimization.
class DivergedError : public Error {
public:
    using Error::Error;
};

}  // namespace fbm
