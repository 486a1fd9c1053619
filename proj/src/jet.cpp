#include "jetcalc/jet.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "jetcalc/error.hpp"
#include "jetcalc/series.hpp"

namespace jetcalc {

Jet::Jet(std::vector<double> base, int order, std::vector<double> coeffs)
    : base_(std::move(base)), order_(order), coeffs_(std::move(coeffs)) {
  if (base_.empty()) throw PreconditionError("jet base point must have dimension >= 1");
  if (order_ < 0) throw PreconditionError("jet order must be non-negative");
  table_ = index_table(dimension(), order_);
  if (coeffs_.size() != table_->size())
    throw PreconditionError("jet of dimension " + std::to_string(dimension()) + " and order " +
                            std::to_string(order_) + " needs " + std::to_string(table_->size()) +
                            " coefficients, got " + std::to_string(coeffs_.size()));
}

Jet Jet::zero(std::vector<double> base, int order) {
  const int n = static_cast<int>(base.size());
  if (n < 1) throw PreconditionError("jet base point must have dimension >= 1");
  const auto size = static_cast<std::size_t>(mi_count(n, order));
  return Jet(std::move(base), order, std::vector<double>(size, 0.0));
}

double Jet::operator[](const MultiIndex& i) const {
  if (i.dimension() != dimension()) throw PreconditionError("multi-index dimension does not match jet");
  if (i.norm() > order_)
    throw PreconditionError("multi-index " + i.to_string() + " exceeds jet order " + std::to_string(order_));
  return coeffs_[mi_rank(i)];
}

void JetFamily::validate() const {
  std::set<std::vector<double>> seen;
  auto check = [&](const Jet& j) {
    if (j.dimension() != dimension) throw PreconditionError("jet family entry has wrong dimension");
    if (j.order() != order) throw PreconditionError("jet family entries must share order " + std::to_string(order));
  };
  for (const auto& e : entries) {
    check(e);
    if (!seen.insert(e.base()).second) throw PreconditionError("jet family has repeated points");
  }
  if (limit) {
    check(*limit);
    if (seen.count(limit->base())) throw PreconditionError("limit point repeats a family point");
  }
}

Jet prolong(const Program& s, std::span<const double> a, int m, std::optional<double> t) {
  return Jet(std::vector<double>(a.begin(), a.end()), m, derivative_coefficients(s, a, m, t));
}

Jet prolong(const Expression& s, std::span<const double> a, int m) {
  if (s.has_parameter()) throw PreconditionError("prolong needs a parameter-free expression");
  return prolong(Program(s), a, m);
}

double taylor_eval(const Jet& T, std::span<const double> y) {
  if (static_cast<int>(y.size()) != T.dimension()) throw PreconditionError("point dimension does not match jet");
  const auto& table = T.table();
  const int n = T.dimension();
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[i] = y[i] - T.base()[i];
  double sum = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const double c = T.coeffs()[r];
    if (c != 0.0) sum += c * monomial_over_factorial(table.indices[r], d);
  }
  return sum;
}

Jet truncate(const Jet& T, int k) {
  if (k < 0 || k > T.order())
    throw PreconditionError("cannot truncate a jet of order " + std::to_string(T.order()) + " to order " +
                            std::to_string(k));
  const auto size = static_cast<std::size_t>(mi_count(T.dimension(), k));
  return Jet(T.base(), k, std::vector<double>(T.coeffs().begin(), T.coeffs().begin() + size));
}

Expression partial(const Expression& e, const MultiIndex& i) {
  Expression r = e;
  for (int k = 0; k < i.dimension(); ++k)
    for (int p = 0; p < i[k]; ++p) r = differentiate(r, k + 1);
  return r;
}

std::vector<Expression> all_partials(const Expression& e, int n, int m) {
  const auto table = index_table(n, m);
  std::vector<Expression> out;
  out.reserve(table->size());
  out.push_back(e);
  for (std::size_t r = 1; r < table->size(); ++r) {
    const auto& I = table->indices[r];
    // Lower the last non-zero coordinate: I = P + e_j.
    int j = n - 1;
    while (I[j] == 0) --j;
    std::vector<int> p(I.exponents().begin(), I.exponents().end());
    --p[static_cast<std::size_t>(j)];
    out.push_back(differentiate(out[mi_rank(MultiIndex(std::move(p)))], j + 1));
  }
  return out;
}

Expression taylor_polynomial(const Jet& T) {
  const auto& table = T.table();
  const int n = T.dimension();
  std::vector<Expression> shifted;
  for (int i = 0; i < n; ++i) shifted.push_back(Expression::variable(i + 1) - T.base()[i]);
  Expression sum;
  for (std::size_t r = 0; r < table.size(); ++r) {
    const double lambda = T.coeffs()[r];
    if (lambda == 0.0) continue;
    const auto& I = table.indices[r];
    Expression mono = Expression::constant(1.0);
    for (int i = 0; i < n; ++i) mono = mono * pow(shifted[i], I[i]);
    // lambda * ((x - a)^I / I!): the quotient has D_I = 1 exactly, so the
    // prolongation at a returns lambda unchanged.
    sum = sum + lambda * (mono / table.factorial[r]);
  }
  return sum;
}

double max_coefficient_difference(const Jet& a, const Jet& b) {
  if (a.base() != b.base() || a.order() != b.order())
    throw PreconditionError("jets must share base point and order");
  double worst = 0.0;
  for (std::size_t r = 0; r < a.coeffs().size(); ++r)
    worst = std::max(worst, std::abs(a.coeffs()[r] - b.coeffs()[r]));
  return worst;
}

}  // namespace jetcalc
