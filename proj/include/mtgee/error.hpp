#pragma once

#include <stdexcept>
#include <string>

namespace mtgee {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken caller contract: wrong dimensions, bad option values.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise inadmissible argument to a link function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Exponential link evaluated beyond the saturation bound.
class SaturationError : public DomainError {
 public:
  SaturationError(const std::string& what, double theta)
      : DomainError(what), theta_(theta) {}
  double theta() const noexcept { return theta_; }

 private:
  double theta_;
};

// The conditional-moment model does not hold at the evaluated point (mu' <= 0).
class ModelViolation : public Error {
 public:
  ModelViolation(const std::string& what, std::size_t component, double theta)
      : Error(what), component_(component), theta_(theta) {}
  std::size_t component() const noexcept { return component_; }
  double theta() const noexcept { return theta_; }

 private:
  std::size_t component_;
  double theta_;
};

// Correlation matrix is not SPD or leaves the configured eigenvalue band.
class CorrelationDegeneracy : public Error {
 public:
  CorrelationDegeneracy(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// Singular normal / bread / information matrix.
class RankDeficiency : public Error {
 public:
  RankDeficiency(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  double lambda_min_;
};

// Newton iteration could not proceed (singular Jacobian after damping).
class SolverFailure : public Error {
 public:
  using Error::Error;
};

// Simulated series left the stability region.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

// Input data could not be read or is incomplete.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mtgee
