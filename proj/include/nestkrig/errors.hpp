#ifndef NESTKRIG_ERRORS_HPP
#define NESTKRIG_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace nestkrig {

enum class ErrorCategory {
  Argument,
  Precondition,
  Parse,
  Io,
  Singular,
  DegenerateWeights,
  SingularAggregation,
  Sampling,
};

/// Stable lowercase name used in the CLI error prefix `ERROR:<category>:`.
std::string_view category_name(ErrorCategory category);

/// True for categories that stem from numerical breakdown rather than bad input.
bool is_numerical(ErrorCategory category);

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string &message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

class ArgumentError : public Error {
public:
  explicit ArgumentError(const std::string &message)
      : Error(ErrorCategory::Argument, message) {}
};

class PreconditionError : public Error {
public:
  explicit PreconditionError(const std::string &message)
      : Error(ErrorCategory::Precondition, message) {}
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string &message)
      : Error(ErrorCategory::Parse, message) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string &message)
      : Error(ErrorCategory::Io, message) {}
};

/// Covariance factorization failed even at the largest admissible jitter.
class SingularMatrixError : public Error {
public:
  explicit SingularMatrixError(const std::string &message)
      : Error(ErrorCategory::Singular, message) {}
};

class DegenerateWeightsError : public Error {
public:
  explicit DegenerateWeightsError(const std::string &message)
      : Error(ErrorCategory::DegenerateWeights, message) {}
};

/// The submodel covariance K_M(x) stayed singular after ridge escalation.
class SingularAggregationError : public Error {
public:
  explicit SingularAggregationError(const std::string &message)
      : Error(ErrorCategory::SingularAggregation, message) {}
};

class SamplingError : public Error {
public:
  explicit SamplingError(const std::string &message)
      : Error(ErrorCategory::Sampling, message) {}
};

} // namespace nestkrig

#endif
