#pragma once

// Truncated jets: base point, order m and raw derivatives lambda_I = D_I f(a)
// for every |I| <= m, stored densely by graded-lex rank.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "jetcalc/expr.hpp"
#include "jetcalc/multi_index.hpp"

namespace jetcalc {

class Jet {
 public:
  Jet() = default;
  /// coeffs in graded-lex order, length C(n + m, n).
  Jet(std::vector<double> base, int order, std::vector<double> coeffs);

  static Jet zero(std::vector<double> base, int order);

  int dimension() const noexcept { return static_cast<int>(base_.size()); }
  int order() const noexcept { return order_; }
  const std::vector<double>& base() const noexcept { return base_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  std::vector<double>& mutable_coeffs() noexcept { return coeffs_; }

  /// lambda_I; I must have |I| <= order.
  double operator[](const MultiIndex& i) const;
  double at_rank(std::size_t rank) const { return coeffs_.at(rank); }

  const IndexTable& table() const { return *table_; }

  friend bool operator==(const Jet& a, const Jet& b) {
    return a.order_ == b.order_ && a.base_ == b.base_ && a.coeffs_ == b.coeffs_;
  }

 private:
  std::vector<double> base_;
  int order_ = 0;
  std::vector<double> coeffs_;
  std::shared_ptr<const IndexTable> table_;
};

/// Finite family of jets {T_a} with a common order, optionally with a
/// distinguished limit point.
struct JetFamily {
  int dimension = 1;
  int order = 0;
  std::vector<Jet> entries;
  std::optional<Jet> limit;

  /// Throws PreconditionError on mismatched orders/dimensions or repeated
  /// points.
  void validate() const;
};

/// j^m_a s. Throws DomainError when s is not defined near a.
Jet prolong(const Expression& s, std::span<const double> a, int m);
Jet prolong(const Program& s, std::span<const double> a, int m,
            std::optional<double> t = std::nullopt);

/// Sum of lambda_I (y - a)^I / I! over |I| <= m.
double taylor_eval(const Jet& T, std::span<const double> y);

/// Restriction to |I| <= k.
Jet truncate(const Jet& T, int k);

/// D_I e by iterated symbolic differentiation.
Expression partial(const Expression& e, const MultiIndex& i);

/// D_I e for every |I| <= m in graded-lex order. Each entry is obtained
/// from an earlier one by a single differentiation.
std::vector<Expression> all_partials(const Expression& e, int n, int m);

/// sum lambda_I (x - a)^I / I! as an expression in x_1..x_n. Its
/// prolongation at the base point reproduces T exactly.
Expression taylor_polynomial(const Jet& T);

/// max |a_I - b_I| over common ranks; bases and orders must agree.
double max_coefficient_difference(const Jet& a, const Jet& b);

}  // namespace jetcalc
