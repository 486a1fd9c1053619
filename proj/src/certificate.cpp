#include "jetcalc/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jetcalc/error.hpp"

namespace jetcalc {

DifferenceEstimate central_difference(const ScalarField& f, std::span<const double> x, const MultiIndex& idx,
                                      double h) {
  const int n = idx.dimension();
  if (static_cast<int>(x.size()) != n) throw PreconditionError("point dimension does not match multi-index");
  // Tensor product of 1-D stencils h^-r sum_j (-1)^j C(r, j) f(x + (r/2 - j) h).
  std::vector<int> j(static_cast<std::size_t>(n), 0);
  std::vector<double> y(x.begin(), x.end());
  double sum = 0.0, magnitude = 0.0;
  for (;;) {
    double w = 1.0;
    for (int k = 0; k < n; ++k) {
      const int r = idx[k];
      w *= static_cast<double>(binomial(r, j[k])) * ((j[k] % 2) ? -1.0 : 1.0);
      y[k] = x[k] + (0.5 * r - j[k]) * h;
    }
    const double v = f(y);
    sum += w * v;
    magnitude += std::abs(w * v);
    int k = 0;
    for (; k < n; ++k) {
      if (++j[k] <= idx[k]) break;
      j[k] = 0;
    }
    if (k == n) break;
  }
  const double scale = std::pow(h, idx.norm());
  return {sum / scale, 64.0 * std::numeric_limits<double>::epsilon() * magnitude / scale};
}

CertificateReport smoothness_certificate(const ScalarField& f, std::span<const double> x, int order,
                                         const CertificateOptions& options) {
  if (order < 1) throw PreconditionError("certificate order must be at least 1");
  if (options.steps.size() < 2) throw PreconditionError("certificate needs at least two steps");
  const int n = static_cast<int>(x.size());
  CertificateReport report;
  report.order = order;
  const auto indices = mi_enumerate(n, order);
  for (const auto& idx : indices) {
    if (idx.norm() == 0) continue;
    CertificateEntry e;
    e.index = idx;
    std::vector<double> rounding;
    for (double h : options.steps) {
      const auto d = central_difference(f, x, idx, h);
      e.estimates.push_back(d.value);
      rounding.push_back(d.rounding);
    }
    for (std::size_t k = 0; k + 1 < e.estimates.size(); ++k) {
      const double largest = std::max(std::abs(e.estimates[k]), std::abs(e.estimates[k + 1]));
      const double gap = std::abs(e.estimates[k] - e.estimates[k + 1]);
      const double bound = options.factor * options.steps[k] * (1.0 + largest) + rounding[k] + rounding[k + 1];
      e.gaps.push_back(gap);
      e.bounds.push_back(bound);
      // NaN gaps fail
      if (!(gap <= bound)) e.pass = false;
    }
    if (!e.pass) {
      report.passed = false;
      if (!report.first_failing_order || idx.norm() < *report.first_failing_order)
        report.first_failing_order = idx.norm();
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace jetcalc
