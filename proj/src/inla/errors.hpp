#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace inla {

// Coarse category used to map failures onto process exit codes.
enum class ErrorKind {
  InputValidation,
  Numerical,
  Configuration,
  Io,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what)
      : Error(ErrorKind::Internal, "dimension mismatch: " + what) {}
};

class IndexOutOfRange : public Error {
 public:
  explicit IndexOutOfRange(const std::string& what)
      : Error(ErrorKind::InputValidation, "index out of range: " + what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::InputValidation, "domain error: " + what) {}
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : Error(ErrorKind::Numerical,
              "matrix not positive definite: non-positive pivot at index " +
                  std::to_string(pivot)),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class IsolatedUnit : public Error {
 public:
  explicit IsolatedUnit(std::vector<std::size_t> units);

  const std::vector<std::size_t>& units() const noexcept { return units_; }

 private:
  std::vector<std::size_t> units_;
};

class TooFewLevels : public Error {
 public:
  explicit TooFewLevels(const std::string& what)
      : Error(ErrorKind::Configuration, "too few levels: " + what) {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& what)
      : Error(ErrorKind::Configuration, what) {}
};

// Malformed input files; carries the 1-based line number when known.
class DataError : public Error {
 public:
  DataError(const std::string& source, std::size_t line, const std::string& what)
      : Error(ErrorKind::InputValidation,
              source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                  ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NewtonDivergence : public Error {
 public:
  NewtonDivergence(const std::string& what, std::vector<double> step_trace)
      : Error(ErrorKind::Numerical, "Newton iteration did not converge: " + what),
        trace_(std::move(step_trace)) {}

  // Max-norm of each Newton step taken.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

class ModeSearchFailure : public Error {
 public:
  ModeSearchFailure(const std::string& what, std::vector<double> best)
      : Error(ErrorKind::Numerical, "hyperparameter mode search failed: " + what),
        best_(std::move(best)) {}

  const std::vector<double>& best_point() const noexcept { return best_; }

 private:
  std::vector<double> best_;
};

class NonConcaveMode : public Error {
 public:
  explicit NonConcaveMode(const std::string& what)
      : Error(ErrorKind::Numerical,
              "negative Hessian at the hyperparameter mode is not positive "
              "definite (model may be unidentified): " + what) {}
};

class MarginalUnavailable : public Error {
 public:
  explicit MarginalUnavailable(const std::string& what)
      : Error(ErrorKind::Numerical, "marginal unavailable: " + what) {}
};

class DiagnosticsUnavailable : public Error {
 public:
  explicit DiagnosticsUnavailable(const std::string& what)
      : Error(ErrorKind::Numerical, "diagnostics unavailable: " + what) {}
};

class OracleTooLarge : public Error {
 public:
  explicit OracleTooLarge(const std::string& what)
      : Error(ErrorKind::Configuration, "oracle problem too large: " + what) {}
};

}  // namespace inla
