#pragma once

#include <stdexcept>
#include <string>

namespace rhsim {

// Base for every error raised by the simulator. The kind string is what
// the CLI puts in its machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed input text (JSON, trace lines). Carries a 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a structural rule (bit index out of
// range, wrong function count, non power-of-two dimension).
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error("structural", what) {}
};

// Address or coordinate outside the configured geometry.
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what) : Error("range", what) {}
};

// Mapping failed GF(2) validation.
class InvalidMappingError : public Error {
 public:
  explicit InvalidMappingError(const std::string& what) : Error("invalid-mapping", what) {}
};

// A placement request cannot be satisfied.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error("infeasible", what) {}
};

// Scenario or CLI input that breaks a documented precondition.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace rhsim
