#ifndef NESTKRIG_AGGREGATION_HPP
#define NESTKRIG_AGGREGATION_HPP

#include <string_view>

namespace nestkrig {

enum class AggregationMethod { PoE, GPoE, BCM, RBCM, Nested };

std::string_view to_string(AggregationMethod method);

/// CLI spelling: poe, gpoe, bcm, rbcm, nested (case-insensitive).
AggregationMethod parse_aggregation_method(std::string_view name);

bool is_variance_based(AggregationMethod method);

} // namespace nestkrig

#endif
