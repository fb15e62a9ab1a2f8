#pragma once

#include <cstdint>

#include "rsq/node.hpp"

namespace rsq {

/// Default ceiling for metastable iterations; g~ orbits beyond it are reported
/// as saturated rather than computed.
inline constexpr std::uint64_t kDefaultSaturationCap = std::uint64_t{1} << 48;

struct IterateResult {
  std::uint64_t value = 0;
  bool saturated = false;
  std::uint64_t iterations = 0;  // applications of g~ actually performed
};

/// Applies g~(n) = n + g(n) ceil(count) times starting at 0, where `g` is an
/// arity-1 node read as an index map (values floored). Stops early at a fixed
/// point. Any iterate above `cap` yields a saturated result. A non-finite
/// `count` iterates until saturation or a fixed point.
IterateResult iterate_shifted(const Node& g, double count, std::uint64_t cap,
                              EvalLog* log = nullptr);

}  // namespace rsq
