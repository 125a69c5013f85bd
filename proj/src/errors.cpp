#include "nestkrig/errors.hpp"

namespace nestkrig {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
  case ErrorCategory::Argument:
    return "argument";
  case ErrorCategory::Precondition:
    return "precondition";
  case ErrorCategory::Parse:
    return "parse";
  case ErrorCategory::Io:
    return "io";
  case ErrorCategory::Singular:
    return "singular";
  case ErrorCategory::DegenerateWeights:
    return "degenerate-weights";
  case ErrorCategory::SingularAggregation:
    return "singular-aggregation";
  case ErrorCategory::Sampling:
    return "sampling";
  }
  return "unknown";
}

bool is_numerical(ErrorCategory category) {
  switch (category) {
  case ErrorCategory::Singular:
  case ErrorCategory::DegenerateWeights:
  case ErrorCategory::SingularAggregation:
  case ErrorCategory::Sampling:
    return true;
  default:
    return false;
  }
}

} // namespace nestkrig
