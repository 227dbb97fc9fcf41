#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fact {

// Root of every error the library throws. Callers that only care about
// "something in the simulator rejected this" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented domain invariant at construction time.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A formula was evaluated outside its mathematical domain (e.g. m = 0 in a
// term that divides by m).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The penalty-scalar formula is singular when no other agent contributes.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

// lambda == 0 disables the free-rider penalty; its formula divides by lambda.
class DegeneratePenaltyError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Numeric search hit a non-finite objective value.
class SearchError : public Error {
 public:
  SearchError(const std::string& what, double point)
      : Error(what), point_(point) {}
  double point() const noexcept { return point_; }

 private:
  double point_;
};

// Server-side configuration cannot be executed (bad roster, n < 3, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Training was asked to run with nobody contributing data.
class NoContributorError : public Error {
 public:
  using Error::Error;
};

// A scenario file could not be parsed or failed validation. line is 0 when
// the problem is not tied to a single line (e.g. a missing required key).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : Error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

// An internal accounting invariant failed. Should be unreachable.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace fact
