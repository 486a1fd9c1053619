#pragma once

// Probing black-box operators: locality, jet determinacy, regularity and
// order, and reconstruction of the finite-order operator behind a handle.
//
// Verdicts are numerical evidence. Perturbations that must not change a
// k-jet are built symbolically (bump times a polynomial with no monomials
// of degree <= k), so the jets agree exactly.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jetcalc/certificate.hpp"
#include "jetcalc/operator.hpp"
#include "jetcalc/random.hpp"

namespace jetcalc {

struct ProbeConfig {
  int trials = 8;
  int M = 8;               // working order: degree of probe polynomials
  double rel_tol = 1e-7;   // tol = rel_tol * (1 + |h(s)(x)|)
  std::vector<double> amplitudes{1.0, 0.1, 0.01};
  int confirmations = 2;   // amplitudes that must fail before a trial fails
  std::uint64_t seed = 0;
  std::optional<Box> domain;  // default [-1, 1]^n
  int jobs = 1;
  double bump_radius = 0.5;

  void validate() const;
  double tolerance(double reference) const { return rel_tol * (1.0 + std::abs(reference)); }
};

enum class ProbeStatus { Pass, Fail, Inconclusive };
const char* to_string(ProbeStatus s);

struct TrialRecord {
  std::size_t trial = 0;
  bool valid = true;     // false when an evaluation failed numerically
  bool failed = false;
  std::vector<double> differences;  // max |h(s')(x) - h(s)(x)| per amplitude
  double tolerance = 0.0;
  std::string perturbation;  // q, or the evaluation error
};

struct ProbeVerdict {
  ProbeStatus status = ProbeStatus::Pass;
  std::size_t valid_trials = 0;
  std::vector<TrialRecord> trials;
  std::optional<std::size_t> witness;  // first failing trial
};

/// Random probe section with r components centred at c: a polynomial of
/// degree M in (y - c) plus a sin(b.y + d), all coefficients in [-1, 1].
Section random_probe_section(int n, int r, int M, std::span<const double> c, Rng& rng,
                             std::optional<Box> domain = std::nullopt);

/// sum of random coefficients times (y - c)^I over lo <= |I| <= hi.
Expression random_polynomial(int n, std::span<const double> c, int lo, int hi, Rng& rng);

/// Perturbs s by an annular cutoff (0 on B(x, r), 1 beyond 1.1 r) times a
/// random quadratic. Requires B(x, r) inside the domain.
ProbeVerdict check_locality(const OperatorHandle& h, const Section& s, std::span<const double> x, double r,
                            const ProbeConfig& cfg = {});

/// Compares h(s)(x) with h(s + B q)(x) where q has degrees k+1..k+2 around
/// x and B = 1 near x. Requires k <= M - 2.
ProbeVerdict check_jet_determinacy(const OperatorHandle& h, std::span<const double> x, int k,
                                   const ProbeConfig& cfg = {});

struct SequenceVerdict {
  std::vector<double> differences;  // |h(s)(x_i) - h(s')(x_i)|
  std::vector<double> tolerances;
  std::optional<std::size_t> tail;  // first index from which all differences are within tolerance
};

/// Requires prolong(s, x_i, k_i) = prolong(s', x_i, k_i) within 1e-9 for
/// every i; a violation throws PreconditionError naming the index.
SequenceVerdict check_sequence_determinacy(const OperatorHandle& h, const Section& s, const Section& s_prime,
                                           const std::vector<std::vector<double>>& xs,
                                           const std::vector<int>& k_of_index, const ProbeConfig& cfg = {});

struct OrderLevel {
  int k = 0;
  ProbeStatus raw = ProbeStatus::Pass;     // this level alone
  ProbeStatus status = ProbeStatus::Pass;  // after failures above are propagated down
  std::optional<std::size_t> witness_trial;
  std::string witness;  // perturbation that changed the value
  std::optional<int> demoted_by;  // level whose failure forced this one
};

struct OrderVerdict {
  std::vector<double> point;
  int k_max = 0;
  std::uint64_t seed = 0;
  std::vector<OrderLevel> levels;
  std::optional<int> order;  // smallest k with every level >= k passing
  bool exceeds = false;      // level k_max fails
  bool inconclusive = false; // candidate level had fewer than cfg.trials witnesses
};

/// Default k_max is M - 2.
OrderVerdict estimate_order(const OperatorHandle& h, std::span<const double> x, int k_max,
                            const ProbeConfig& cfg = {});

struct RegularityReport {
  std::vector<CertificateReport> components;  // one per target component
  bool passed() const;
};

/// Certificate of t -> h(s_t)(x) at t0 up to order 2.
RegularityReport check_regularity(const OperatorHandle& h, const Section& s_t, std::span<const double> x, double t0,
                                  const ProbeConfig& cfg = {}, const CertificateOptions& certificate = {});

/// T -> h(taylor_polynomial_section(T))(x) on the fibre over x.
class Reconstruction {
 public:
  Reconstruction(OperatorHandle h, std::vector<double> x, int k);

  std::vector<double> operator()(const Jet& T) const;
  std::vector<double> operator()(const std::vector<Jet>& jets) const;

  int order() const noexcept { return k_; }
  const std::vector<double>& point() const noexcept { return x_; }

 private:
  OperatorHandle h_;
  std::vector<double> x_;
  int k_;
};

Reconstruction reconstruct(const OperatorHandle& h, std::span<const double> x, int k);

struct LinearTableEntry {
  std::vector<double> point;
  // coefficients[target][a * C(n+k,n) + rank(I)] = P^{I,a}(x)
  std::vector<std::vector<double>> coefficients;
};

struct LinearityWitness {
  std::size_t grid_index = 0;
  double alpha = 1.0, beta = 1.0;
  std::string s1, s2;  // first component of each section
  std::vector<double> combined;   // h(alpha s1 + beta s2)(x)
  std::vector<double> separate;   // alpha h(s1)(x) + beta h(s2)(x)
  double residual = 0.0;
  double tolerance = 0.0;
};

struct LinearReconstruction {
  int k = 0;
  std::vector<MultiIndex> indices;  // graded-lex, |I| <= k
  std::vector<LinearTableEntry> table;
  bool linear = true;
  double max_residual = 0.0;  // over all superposition trials
  std::optional<LinearityWitness> witness;
  std::uint64_t seed = 0;
};

/// P^{I,a}(x) = h(e_a (y - x)^I / I!)(x) per grid point, plus a superposition
/// test: the canonical alpha = beta = 1, s1 = s2 = 1 first, then cfg.trials
/// random (alpha, beta, s1, s2) per grid point.
LinearReconstruction reconstruct_linear(const OperatorHandle& h, const std::vector<std::vector<double>>& grid, int k,
                                        const ProbeConfig& cfg = {});

/// sum_I P^{I,a}(x) lambda_{I,a} for target component `target`.
double apply_linear_table(const LinearTableEntry& entry, int target, const std::vector<Jet>& jets);

}  // namespace jetcalc
