#pragma once

#include <stdexcept>
#include <string>

namespace fracvar {

/// Category tag carried by every library exception. The CLI maps these to
/// the "kind" field of its JSON error record.
enum class ErrorKind {
  domain,
  convergence,
  ellipticity,
  solvability,
  consistency,
  data,
  oracle,
  config,
  parse,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

/// An epsilon-limit did not settle within the configured schedule.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_distance)
      : Error(ErrorKind::convergence, what), last_distance_(last_distance) {}

  double last_distance() const noexcept { return last_distance_; }

 private:
  double last_distance_;
};

class EllipticityError : public Error {
 public:
  explicit EllipticityError(const std::string& what) : Error(ErrorKind::ellipticity, what) {}
};

class SolvabilityError : public Error {
 public:
  explicit SolvabilityError(const std::string& what) : Error(ErrorKind::solvability, what) {}
};

/// Internal invariant broken (e.g. a Gram matrix that is not SPD).
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(ErrorKind::consistency, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(ErrorKind::oracle, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

}  // namespace fracvar
