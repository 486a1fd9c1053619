#pragma once

// Sections over boxes, differential operators written in jet coordinates,
// the universal polynomial family and the catalog of black-box operators.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "jetcalc/expr.hpp"
#include "jetcalc/jet.hpp"

namespace jetcalc {

struct Box {
  std::vector<double> lo, hi;

  static Box cube(int n, double lo = -1.0, double hi = 1.0);
  /// c + [-radius, radius]^n
  static Box around(std::span<const double> c, double radius = 1.0);
  int dimension() const { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> x) const;
};

class Section {
 public:
  Section() = default;
  /// Components are expressions in x_1..x_n (and possibly t).
  Section(int n, std::vector<Expression> components, std::optional<Box> domain = std::nullopt);
  static Section scalar(const Expression& e, int n, std::optional<Box> domain = std::nullopt);

  int dimension() const noexcept { return n_; }
  int size() const noexcept { return static_cast<int>(components_.size()); }
  const std::vector<Expression>& components() const noexcept { return components_; }
  const Expression& component(int a) const { return components_.at(static_cast<std::size_t>(a)); }
  const Box& domain() const noexcept { return domain_; }
  bool parametric() const noexcept { return parametric_; }

  /// s_t for a fixed t.
  Section at_parameter(double t) const;

  /// Component values at x. Throws on parametric sections.
  std::vector<double> evaluate(std::span<const double> x) const;

  /// j^m_x of every component.
  std::vector<Jet> prolong(std::span<const double> x, int m) const;

 private:
  int n_ = 0;
  std::vector<Expression> components_;
  Box domain_;
  bool parametric_ = false;
};

/// P(x, u^a_I) with jet coordinates u<a>_<rank>, a = 1..r, rank < C(n+k, n).
class JetOperator {
 public:
  JetOperator() = default;
  JetOperator(int n, int r, int k, std::vector<Expression> exprs);
  /// Parses each text with jet coordinates enabled.
  static JetOperator parse(int n, int r, int k, const std::vector<std::string>& texts);

  int dimension() const noexcept { return n_; }
  int components() const noexcept { return r_; }
  int order() const noexcept { return k_; }
  int targets() const noexcept { return static_cast<int>(exprs_.size()); }
  const std::vector<Expression>& expressions() const noexcept { return exprs_; }
  /// Number of jet coordinates per component.
  int stride() const noexcept { return stride_; }

  /// Evaluates P at x on the given jets (one per component, order >= k).
  std::vector<double> evaluate(std::span<const double> x, const std::vector<Jet>& jets) const;

 private:
  int n_ = 0, r_ = 0, k_ = 0, stride_ = 0;
  std::vector<Expression> exprs_;
  std::shared_ptr<const std::vector<Program>> programs_;
};

/// P(j^k_x s). Requires x in the section's domain and s parameter-free.
std::vector<double> apply_jet_operator(const JetOperator& P, const Section& s, std::span<const double> x);

struct UniversalFamily {
  int n = 1;
  int r = 1;
  int k = 0;
  /// r * C(n + k, n)
  std::size_t coefficient_dimension() const;
};

/// xi_f: component a is sum_I f[a * C(n+k,n) + rank(I)] x^I.
Section universal_section(const UniversalFamily& U, std::span<const double> f);

/// (x - c)^I as an expression; c may be empty for the origin.
Expression centered_monomial(const MultiIndex& i, std::span<const double> c);

/// The polynomial section sum lambda_I (x - a)^I / I! of each jet, on the
/// box a + [-1, 1]^n.
Section taylor_polynomial_section(const Jet& T);
Section taylor_polynomial_section(const std::vector<Jet>& jets);

struct OperatorMetadata {
  std::string name;
  std::optional<bool> local;
  std::optional<bool> linear;
  std::optional<int> declared_order;
  int components = 1;  // components of the input sections
  int targets = 1;     // components of the output
  nlohmann::json params = nlohmann::json::object();
};

/// A black-box local operator: (section, x) -> value in R^targets.
/// Callable concurrently; equal inputs give equal outputs.
class OperatorHandle {
 public:
  using Evaluator = std::function<std::vector<double>(const Section&, std::span<const double>)>;

  OperatorHandle() = default;
  OperatorHandle(OperatorMetadata meta, Evaluator fn);

  std::vector<double> operator()(const Section& s, std::span<const double> x) const;
  /// Parametric sections are frozen at t first.
  std::vector<double> operator()(const Section& s, std::span<const double> x, double t) const;

  const OperatorMetadata& metadata() const noexcept { return meta_; }

 private:
  OperatorMetadata meta_;
  Evaluator fn_;
};

// Catalog fixtures.
OperatorHandle from_jet_operator(const JetOperator& P);
/// phi(s)(x) = s(x + v); not local.
OperatorHandle shift(std::vector<double> v);
/// phi(s)(x) = s(x)^2
OperatorHandle square();
/// sum_i D_{2 e_i} s(x)
OperatorHandle laplacian();
/// D_I s(x)
OperatorHandle derivative(const MultiIndex& i);
/// phi(s)(x) = g(s(x)) with g an expression in x1.
OperatorHandle pointwise_compose(const Expression& g);
/// phi(s)(x) = s(x) + 1 if s(x) >= 0, s(x) otherwise.
OperatorHandle discontinuous_family();
/// phi(s)(x) = D_{d(x) e_1} s(x) W(x) with d(x) = min(ceil(1/|x - x0|), M)
/// and W a flat window equal to 1 on |x - x0| <= 1, 0 beyond 2.
OperatorHandle unbounded_order(std::vector<double> x0, int M = 8);

/// Builds a fixture by name from JSON parameters. Throws PreconditionError
/// for unknown names or bad parameters.
OperatorHandle catalog_make(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

/// Names accepted by catalog_make.
const std::vector<std::string>& catalog_names();

}  // namespace jetcalc
