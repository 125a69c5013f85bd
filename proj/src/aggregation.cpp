#include "nestkrig/aggregation.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "nestkrig/errors.hpp"

namespace nestkrig {

std::string_view to_string(AggregationMethod method) {
  switch (method) {
  case AggregationMethod::PoE:
    return "poe";
  case AggregationMethod::GPoE:
    return "gpoe";
  case AggregationMethod::BCM:
    return "bcm";
  case AggregationMethod::RBCM:
    return "rbcm";
  case AggregationMethod::Nested:
    return "nested";
  }
  return "unknown";
}

AggregationMethod parse_aggregation_method(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "poe") {
    return AggregationMethod::PoE;
  }
  if (key == "gpoe") {
    return AggregationMethod::GPoE;
  }
  if (key == "bcm") {
    return AggregationMethod::BCM;
  }
  if (key == "rbcm") {
    return AggregationMethod::RBCM;
  }
  if (key == "nested") {
    return AggregationMethod::Nested;
  }
  throw ArgumentError("unknown aggregation method '" + std::string(name) +
                      "' (expected poe, gpoe, bcm, rbcm or nested)");
}

bool is_variance_based(AggregationMethod method) {
  return method != AggregationMethod::Nested;
}

} // namespace nestkrig
