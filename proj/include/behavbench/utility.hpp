#pragma once

#include <cmath>
#include <string>

#include "behavbench/errors.hpp"

namespace behavbench {

/// Weight b on own payoff (1 - b on the partner's) and CES exponent r.
struct UtilityParams {
  double b = 0.5;
  double r = 1.0;

  void validate() const {
    if (!(b >= 0.0 && b <= 1.0)) throw RangeError("utility: b must lie in [0, 1]");
    if (!(r > 0.0) || !std::isfinite(r)) throw RangeError("utility: r must be positive");
  }
  friend bool operator==(const UtilityParams&, const UtilityParams&) = default;
};

/// U = [b * own^r + (1 - b) * partner^r]^(1/r).
///
/// The limits b = 1, b = 0, own == partner and r = 1 are returned exactly;
/// r = 1/2 goes through sqrt and a square.
inline double ces_utility(double own, double partner, const UtilityParams& p) {
  p.validate();
  if (!(own >= 0.0) || !(partner >= 0.0))
    throw RangeError("ces_utility: payoffs must be non-negative");
  if (p.b == 1.0 || own == partner) return own;
  if (p.b == 0.0) return partner;
  if (p.r == 1.0) return p.b * own + (1.0 - p.b) * partner;
  if (p.r == 0.5) {
    const double s = p.b * std::sqrt(own) + (1.0 - p.b) * std::sqrt(partner);
    return s * s;
  }
  return std::pow(p.b * std::pow(own, p.r) + (1.0 - p.b) * std::pow(partner, p.r), 1.0 / p.r);
}

} // namespace behavbench
