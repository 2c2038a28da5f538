#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace routhsim {

enum class ErrorKind {
    SingularFrame,
    DerivativeMismatch,
    InvarianceViolation,
    InvalidSplit,
    NotGRegular,
    NewtonDiverged,
    SingularJacobian,
    Inconsistent,
    CollisionSingularity,
    ParseError,
    DomainError,
    InvalidArgument,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &msg) : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::vector<std::string> expected, const std::string &msg)
        : Error(ErrorKind::ParseError, msg), offset_(offset), expected_(std::move(expected))
    {
    }

    std::size_t offset() const { return offset_; }
    const std::vector<std::string> &expected() const { return expected_; }

private:
    std::size_t offset_;
    std::vector<std::string> expected_;
};

/// Solver failure carrying the last residual norm and, once known, the time.
class SolverError : public Error {
public:
    SolverError(ErrorKind kind, const std::string &msg, double residual, double time = -1.0)
        : Error(kind, msg), residual_(residual), time_(time)
    {
    }

    double residual() const { return residual_; }
    double time() const { return time_; }

private:
    double residual_;
    double time_;
};

inline const char *to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::SingularFrame: return "SingularFrame";
    case ErrorKind::DerivativeMismatch: return "DerivativeMismatch";
    case ErrorKind::InvarianceViolation: return "InvarianceViolation";
    case ErrorKind::InvalidSplit: return "InvalidSplit";
    case ErrorKind::NotGRegular: return "NotGRegular";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::Inconsistent: return "Inconsistent";
    case ErrorKind::CollisionSingularity: return "CollisionSingularity";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace routhsim
