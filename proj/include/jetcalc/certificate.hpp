#pragma once

// Multi-scale smoothness certificate: central finite differences D_I of
// every order 1..order at a point, computed at a ladder of steps, must
// settle down as the step shrinks. Evidence, not proof.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "jetcalc/multi_index.hpp"

namespace jetcalc {

using ScalarField = std::function<double(std::span<const double>)>;

struct CertificateOptions {
  std::vector<double> steps{1e-1, 1e-2, 1e-3, 1e-4};
  // successive estimates at h_k, h_{k+1} must agree within
  // factor * h_k * (1 + max(|D_k|, |D_{k+1}|)), plus the rounding floor of both.
  double factor = 10.0;
};

struct CertificateEntry {
  MultiIndex index;
  std::vector<double> estimates;  // one per step
  std::vector<double> gaps;       // |D_k - D_{k+1}|
  std::vector<double> bounds;     // allowed gap
  bool pass = true;
};

struct CertificateReport {
  int order = 0;
  bool passed = true;
  std::optional<int> first_failing_order;
  std::vector<CertificateEntry> entries;  // graded-lex, |I| = 1..order
};

CertificateReport smoothness_certificate(const ScalarField& f, std::span<const double> x, int order,
                                         const CertificateOptions& options = {});

/// Central difference estimate of D_I f(x) with step h, and the rounding
/// error bound of the same sum.
struct DifferenceEstimate {
  double value;
  double rounding;
};
DifferenceEstimate central_difference(const ScalarField& f, std::span<const double> x, const MultiIndex& i,
                                      double h);

}  // namespace jetcalc
