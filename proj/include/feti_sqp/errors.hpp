#pragma once

#include <stdexcept>
#include <string>

namespace feti_sqp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid physical or numerical parameter (material constants, tolerances).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (mesh/subdomain mismatch, unknown keys, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// det F <= 0 at some quadrature point. Callers shrink the step.
class InadmissibleDeformation : public Error {
public:
    using Error::Error;
};

/// Singular or numerically broken factorization.
class FactorizationError : public Error {
public:
    using Error::Error;
};

/// Krylov solver failure.
class KrylovError : public Error {
public:
    enum class Kind { MaxIterations, Breakdown };

    KrylovError(Kind kind, const std::string& what, int iterations)
        : Error(what), kind_(kind), iterations_(iterations) {}

    Kind kind() const noexcept { return kind_; }
    int iterations() const noexcept { return iterations_; }

private:
    Kind kind_;
    int iterations_;
};

/// Violated internal invariant.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace feti_sqp
