// types.hpp — Shared numeric aliases and the error hierarchy

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace esln {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorKind {
    Config,     // malformed or inconsistent input
    Numerical,  // divergence, factorization or stability failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define ESLN_DEFINE_ERROR(Name, Kind)                                   \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what)                          \
            : Error(ErrorKind::Kind, #Name ": " + what) {}              \
    };

ESLN_DEFINE_ERROR(NonPositiveMode, Numerical)
ESLN_DEFINE_ERROR(AsymmetricInput, Config)
ESLN_DEFINE_ERROR(DimensionMismatch, Config)
ESLN_DEFINE_ERROR(OutOfRange, Config)
ESLN_DEFINE_ERROR(CapExceeded, Config)
ESLN_DEFINE_ERROR(FactorizationFailure, Numerical)
ESLN_DEFINE_ERROR(Diverged, Numerical)
ESLN_DEFINE_ERROR(TooManyFailures, Numerical)
ESLN_DEFINE_ERROR(ParseError, Config)

#undef ESLN_DEFINE_ERROR

// Validation failure tied to a dotted field path such as "bath.lambda".
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(ErrorKind::Config, "ValidationError: " + field + ": " + what),
          field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Max-norm of a matrix; zero for empty matrices.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// ||A - A^H||_max <= tol * ||A||_max
inline bool is_hermitian(const CMatrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    return max_abs(a - a.adjoint()) <= tol * max_abs(a);
}

}  // namespace esln
