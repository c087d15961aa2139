#pragma once

namespace rbc {

/// Rates in nats per channel use.
struct RatePair {
  double r1 = 0.0;
  double r2 = 0.0;
};

}  // namespace rbc
