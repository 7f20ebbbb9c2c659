#pragma once

#include <stdexcept>
#include <string>

namespace adaptsim {

// Input does not satisfy a type invariant (malformed tables, bad grids, configs).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's domain (probability > 1, negative rain, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation not allowed in the current state (step after done, duplicate install).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public FitError {
 public:
  ConvergenceError(const std::string& what, double grad_norm)
      : FitError(what), grad_norm_(grad_norm) {}
  double gradient_norm() const noexcept { return grad_norm_; }

 private:
  double grad_norm_;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text input that cannot be parsed. Carries file and line for the message.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file, int line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }

 private:
  std::string file_;
  int line_;
};

// A cross reference in a scenario does not resolve (edge -> missing node, ...).
class ReferenceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Internal invariant broken (e.g. a cycle in a flow field).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace adaptsim
