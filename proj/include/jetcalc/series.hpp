#pragma once

// Truncated multivariate Taylor arithmetic over compiled expressions.
//
// Propagates the derivatives D_I f(a), |I| <= m, of every subexpression
// through the tape using Leibniz-type recurrences. Coefficient I is always computed with
// the same operation sequence whatever the truncation order, so lower
// orders of a higher-order expansion are bit-identical to a direct
// lower-order expansion.

#include <optional>
#include <span>
#include <vector>

#include "jetcalc/expr.hpp"
#include "jetcalc/multi_index.hpp"

namespace jetcalc {

/// Derivatives D_I (graded-lex, |I| <= m) of `program` at `base`. Throws DomainError when the expansion point is outside the
/// domain of a subexpression.
std::vector<double> derivative_coefficients(const Program& program,
                                        std::span<const double> base, int m,
                                        std::optional<double> t = std::nullopt);

}  // namespace jetcalc
