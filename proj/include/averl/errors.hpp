#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace averl {

/// Caller broke a documented precondition (bad dimensions, out-of-range
/// argument, malformed request).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The policy-induced chain has more than one recurrent class, so the
/// quantities this library computes (gain, stationary distribution) are
/// not well defined.
class NotUnichainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An enumeration or export would exceed its configured size cap.
class CapExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations; carries the last residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual(last_residual) {}
    double last_residual;
};

/// Malformed input text (env spec strings, config documents, CSV).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An MDP file failed validation; carries the full violation report.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::vector<std::string> report)
        : std::runtime_error(what), report(std::move(report)) {}
    std::vector<std::string> report;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace averl
