#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bbcopas {

// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function (e.g. G^-1 at 0 or 1,
// a zero cell in an uncorrected t-statistic).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// A likelihood or quadrature evaluation produced a non-finite value.
class NumericFailure : public std::runtime_error {
public:
  NumericFailure(const std::string& what, std::size_t study_index)
      : std::runtime_error(what), study_index_(study_index) {}
  std::size_t study_index() const noexcept { return study_index_; }

private:
  std::size_t study_index_;
};

// Optimizer ran out of budget without meeting the convergence criteria.
class ConvergenceFailure : public std::runtime_error {
public:
  ConvergenceFailure(const std::string& what, std::vector<double> best_point,
                     double gradient_norm)
      : std::runtime_error(what), best_point_(std::move(best_point)),
        gradient_norm_(gradient_norm) {}
  const std::vector<double>& best_point() const noexcept { return best_point_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

private:
  std::vector<double> best_point_;
  double gradient_norm_;
};

// No gamma0 reproduces the requested marginal selection probability.
class ConstraintInfeasible : public std::runtime_error {
public:
  ConstraintInfeasible(const std::string& what, double p_low, double p_high)
      : std::runtime_error(what), p_low_(p_low), p_high_(p_high) {}
  double achievable_low() const noexcept { return p_low_; }
  double achievable_high() const noexcept { return p_high_; }

private:
  double p_low_;
  double p_high_;
};

// Exact enumeration requested beyond the configured term cap.
class SizeError : public std::length_error {
public:
  using std::length_error::length_error;
};

class SingularInformation : public std::runtime_error {
public:
  SingularInformation(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

private:
  double condition_number_;
};

// Input file or configuration problem; line is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line, std::string field)
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

// Output location cannot be created or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace bbcopas
