#pragma once

#include <stdexcept>
#include <string>

namespace steinlab {

// Base of every error raised by the library. Each subtype corresponds to one
// failure mode of the public operations so callers can branch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidLaw : public Error {
 public:
  using Error::Error;
};

class UnsupportedPair : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

// A precondition on the inputs (derivative order, growth bound, norm class)
// does not hold.
class ContractError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition_estimate)
      : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// Two evaluation routes of the same quantity disagree by more than their
// combined error budget.
class ToleranceExceeded : public Error {
 public:
  ToleranceExceeded(const std::string& what, double discrepancy, double budget)
      : Error(what), discrepancy_(discrepancy), budget_(budget) {}
  double discrepancy() const { return discrepancy_; }
  double budget() const { return budget_; }

 private:
  double discrepancy_;
  double budget_;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace steinlab
