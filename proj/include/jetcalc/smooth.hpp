#pragma once

// Flat-based cutoff functions built as expressions, so they can be
// prolonged and differentiated like any other section.

#include <span>

#include "jetcalc/expr.hpp"

namespace jetcalc {

/// 0 for u <= lo, 1 for u >= hi, smooth in between. Requires lo < hi.
Expression smooth_step(const Expression& u, double lo, double hi);

/// ||x - c||^2 over the coordinates of c.
Expression squared_distance(std::span<const double> center);

/// 1 on ||x - c|| <= r_in, 0 on ||x - c|| >= r_out.
Expression radial_bump(std::span<const double> center, double r_in, double r_out);

/// 0 on ||x - c|| <= r_in, 1 on ||x - c|| >= r_out.
Expression annular_cutoff(std::span<const double> center, double r_in, double r_out);

}  // namespace jetcalc
