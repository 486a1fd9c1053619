#include "jetcalc/smooth.hpp"

#include "jetcalc/error.hpp"

namespace jetcalc {

Expression smooth_step(const Expression& u, double lo, double hi) {
  if (!(lo < hi)) throw PreconditionError("smooth_step needs lo < hi");
  const Expression rise = flat(u - lo);
  const Expression fall = flat(hi - u);
  return rise / (rise + fall);
}

Expression squared_distance(std::span<const double> center) {
  if (center.empty()) throw PreconditionError("center must have dimension >= 1");
  Expression rho;
  for (std::size_t i = 0; i < center.size(); ++i)
    rho = rho + pow(Expression::variable(static_cast<int>(i) + 1) - center[i], 2);
  return rho;
}

Expression radial_bump(std::span<const double> center, double r_in, double r_out) {
  if (!(0.0 <= r_in && r_in < r_out)) throw PreconditionError("radial_bump needs 0 <= r_in < r_out");
  const double a = r_out * r_out, b = r_in * r_in;
  return smooth_step((a - squared_distance(center)) / (a - b), 0.0, 1.0);
}

Expression annular_cutoff(std::span<const double> center, double r_in, double r_out) {
  if (!(0.0 <= r_in && r_in < r_out)) throw PreconditionError("annular_cutoff needs 0 <= r_in < r_out");
  const double a = r_out * r_out, b = r_in * r_in;
  return smooth_step((squared_distance(center) - b) / (a - b), 0.0, 1.0);
}

}  // namespace jetcalc
