#pragma once

// Whitney's Taylor condition, discretized over a ladder of scales, and the
// constructive extensions: cone gluing, separated finite sets and
// sequences accumulating at the origin.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "jetcalc/certificate.hpp"
#include "jetcalc/expr.hpp"
#include "jetcalc/jet.hpp"

namespace jetcalc {

/// |lambda_{I,y} - sum_{|J|<=m} lambda_{I+J,x} (y-x)^J / J!|.
/// Needs Tx.order >= |I| + m and Ty.order >= |I|.
double taylor_remainder(const Jet& Tx, const Jet& Ty, const MultiIndex& i, int m);

inline const std::vector<double>& default_scales() {
  static const std::vector<double> s{0.2, 0.1, 0.05, 0.02, 0.01};
  return s;
}

/// Allowed modulus at scale delta.
using ToleranceRule = std::function<double(double delta)>;

struct ScaleVerdict {
  double delta = 0.0;
  double modulus = 0.0;  // W(I, m, delta)
  double tolerance = 0.0;
  bool vacuous = true;  // no pair with 0 < |a - b| <= delta
  bool holds = true;
  std::size_t pairs = 0;  // ordered pairs inspected at this scale
  // W is attained expanding at `from` and predicting at `to`.
  std::vector<double> witness_from;
  std::vector<double> witness_to;
};

struct IndexVerdict {
  MultiIndex index;
  std::vector<ScaleVerdict> scales;
};

struct WhitneyReport {
  int m = 0;
  std::vector<double> scales;
  std::vector<IndexVerdict> entries;  // graded-lex over |I| <= m

  bool holds_at(std::size_t scale) const;
  bool holds() const;
  /// Largest modulus over all indices at a scale.
  double modulus_at(std::size_t scale) const;
};

/// W(I, m, delta) = max over ordered pairs a != b with |a - b| <= delta of
/// taylor_remainder(T_a, T_b, I, m) / |b - a|^m, for every |I| <= m.
/// Needs family order >= 2m. Ties keep the lexicographically first pair.
WhitneyReport check_taylor_condition(const JetFamily& family, int m, const std::vector<double>& scales,
                                     const ToleranceRule& tol, int jobs = 1);

/// Decay of a sequence family towards a zero jet at its limit point:
/// W(I, m, delta) = max over |a_k - a_0| <= delta of |lambda_{I,a_k}| / |a_k - a_0|^m,
/// which is the Taylor remainder against the zero jet at the limit.
WhitneyReport check_decay(const JetFamily& family, int m, const std::vector<double>& scales,
                          const ToleranceRule& tol);

// ---------------------------------------------------------------------------
// Cone gluing

/// K = {x : x_1^2 + ... + x_{n-1}^2 <= x_n^2, |x_n| <= 1}, split into the
/// nappes K1 (x_n >= 0) and K2 (x_n <= 0) which meet at the apex.
struct ConeGeometry {
  int n = 2;
};

enum class ConeRegion { K1, K2, Apex, Outside };

const char* to_string(ConeRegion r);

ConeRegion cone_membership(std::span<const double> x, const ConeGeometry& geom);

/// Uniform-ish samples of a nappe with |x| >= min_norm.
std::vector<std::vector<double>> sample_nappe(const ConeGeometry& geom, ConeRegion nappe, std::size_t count,
                                              std::uint64_t seed, double min_norm = 1e-3);

/// f = v + chi (u - v). The expression is singular at the apex only through
/// chi, so evaluation goes through operator(), which returns v there.
struct ConeGlue {
  int n = 2;
  Expression expression;
  Expression cutoff;  // chi
  Expression v;

  double operator()(std::span<const double> x) const;

 private:
  friend ConeGlue cone_glue(const Expression&, const Expression&, const ConeGeometry&, int);
  std::shared_ptr<const Program> f_;
  std::shared_ptr<const Program> v_;
};

/// Requires prolong(u, 0, m) and prolong(v, 0, m) to agree within 1e-9.
ConeGlue cone_glue(const Expression& u, const Expression& v, const ConeGeometry& geom, int m);

/// chi(x) = step(x_n / |x|; 0, 1/sqrt 2): 1 on K1 minus the apex, 0 on K2.
Expression angular_cutoff(int n);

// ---------------------------------------------------------------------------
// Extensions

/// f = sum_k B_k T_k with B_k = 1 on |x - a_k| <= r_k/2, 0 beyond r_k,
/// r_k = (nearest-neighbour distance of a_k) / 3.
Expression extend_separated(const JetFamily& family);

struct SequenceOptions {
  double c = 2.0;           // separation constant
  int m = -1;               // decay order; -1 means the family order
  double epsilon = 1.0;     // decay tolerance at every scale
  std::vector<double> scales = default_scales();
  bool certify = true;
  CertificateOptions certificate;
};

struct SequenceExtension {
  Expression f;
  WhitneyReport decay;
  std::optional<CertificateReport> certificate;  // at the limit point, order m
};

/// Extension of a family a_k -> a_0 with T_{a_0} = 0 (family.limit). Bump
/// radii are |a_k - a_0| / (4c). Throws PreconditionError when the
/// separation or decay hypothesis fails.
SequenceExtension extend_sequence(const JetFamily& family, const SequenceOptions& options = {});

/// Separation |a_k|, |a_l| <= c |a_k - a_l| (relative to the limit point);
/// returns the first violating pair.
std::optional<std::pair<std::size_t, std::size_t>> separation_violation(const JetFamily& family, double c);

}  // namespace jetcalc
