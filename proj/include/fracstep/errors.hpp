#pragma once

#include <stdexcept>
#include <string>

namespace fracstep {

/// Argument outside the mathematical domain of a function (alpha <= 0, Gamma pole, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input violates an operation's precondition (incompatible data, wrong mesh, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear solver breakdown or non-convergence.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical self-check (truncation or quadrature doubling) failed.
class SelfCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracstep
