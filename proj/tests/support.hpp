#pragma once

// Test-only oracles: finite differences and a seeded corpus of tame
// expressions. Nothing here is used by the library itself.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "jetcalc/expr.hpp"

namespace testsupport {

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
inline int pick(std::mt19937_64& rng, int count) { return static_cast<int>(rng() % static_cast<std::uint64_t>(count)); }

inline std::vector<double> random_point(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = uniform(rng, lo, hi);
  return x;
}

/// Central difference of f along coordinate i (0-based).
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, int i, double h = 1e-5) {
  const double x0 = x[static_cast<std::size_t>(i)];
  x[static_cast<std::size_t>(i)] = x0 + h;
  const double fp = f(x);
  x[static_cast<std::size_t>(i)] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Random expression text over x1..xn whose values and derivatives stay
/// moderate on [-1,1]^n. Every log and division has an argument bounded
/// away from zero.
inline std::string random_expression_text(std::mt19937_64& rng, int n, int depth) {
  auto var = [&] { return "x" + std::to_string(pick(rng, n) + 1); };
  auto coef = [&] { return number(uniform(rng, -1.5, 1.5)); };
  if (depth <= 0) {
    switch (pick(rng, 3)) {
      case 0: return var();
      case 1: return "(" + coef() + ")";
      default: return "(" + coef() + "*" + var() + ")";
    }
  }
  auto sub = [&] { return random_expression_text(rng, n, depth - 1); };
  switch (pick(rng, 10)) {
    case 0: return "(" + sub() + " + " + sub() + ")";
    case 1: return "(" + sub() + " - " + sub() + ")";
    case 2: return "(" + sub() + " * " + sub() + ")";
    case 3: return "(" + sub() + ")/(2.5 + sin(" + sub() + "))";
    case 4: return "(" + sub() + ")^" + std::to_string(2 + pick(rng, 2));
    case 5: return "exp(0.5*sin(" + sub() + "))";
    case 6: return "sin(" + sub() + ")";
    case 7: return "cos(" + sub() + ")";
    case 8: return "log(1.5 + (" + sub() + ")^2)";
    default: return "flat(" + var() + " + " + number(uniform(rng, 0.0, 0.8)) + ")*(" + sub() + ")";
  }
}

}  // namespace testsupport
