#pragma once

// Smooth expression language: parsing, printing, evaluation and exact
// symbolic differentiation.
//
// Expressions are immutable DAGs of shared nodes. Copies are cheap and an
// Expression may be evaluated from any number of threads at once.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jetcalc {

enum class NodeKind : std::uint8_t {
  Constant,
  Variable,   // x_i, stored 0-based
  Parameter,  // t
  JetCoord,   // u<a>_<rank>, only inside jet-operator expressions
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // non-negative integer exponent
  Exp,
  Sin,
  Cos,
  Log,
  Flat,  // u -> exp(-1/u) for u > 0, 0 otherwise
};

namespace detail {

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;  // Constant
  int index = 0;       // Variable / JetCoord component (0-based) / Pow exponent
  int rank = 0;        // JetCoord graded-lex rank
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  // Cached structural facts.
  int max_variable = 0;  // highest 1-based variable index referenced
  bool has_parameter = false;
  bool has_jet_coordinates = false;
  int max_component = 0;  // highest 1-based jet component referenced
  int max_rank = -1;      // highest jet-coordinate rank referenced
};

using NodePtr = std::shared_ptr<const Node>;

}  // namespace detail

class Expression {
 public:
  /// The constant 0.
  Expression();

  static Expression constant(double value);
  /// Coordinate x_i with 1-based `i`.
  static Expression variable(int i);
  static Expression parameter();
  /// Jet coordinate u^a_rank with 1-based component `a`.
  static Expression jet_coordinate(int component, int rank);

  /// Raw node construction: no folding. Used by the parser so that the
  /// tree mirrors the source text.
  static Expression raw_unary(NodeKind kind, const Expression& arg);
  static Expression raw_binary(NodeKind kind, const Expression& lhs,
                               const Expression& rhs);
  static Expression raw_pow(const Expression& base, int exponent);

  NodeKind kind() const noexcept { return node_->kind; }
  const detail::NodePtr& node() const noexcept { return node_; }

  bool is_constant() const noexcept { return kind() == NodeKind::Constant; }
  bool is_constant(double value) const noexcept {
    return is_constant() && node_->value == value;
  }
  double constant_value() const noexcept { return node_->value; }

  /// Highest 1-based variable index referenced (0 for none).
  int dimension() const noexcept { return node_->max_variable; }
  bool has_parameter() const noexcept { return node_->has_parameter; }
  bool has_jet_coordinates() const noexcept {
    return node_->has_jet_coordinates;
  }
  int max_jet_component() const noexcept { return node_->max_component; }
  int max_jet_rank() const noexcept { return node_->max_rank; }

  /// Operands; empty Expression() for missing ones is never returned, callers
  /// must check kind() first.
  Expression lhs() const { return Expression(node_->lhs); }
  Expression rhs() const { return Expression(node_->rhs); }

  /// Number of distinct nodes in the DAG.
  std::size_t node_count() const;

  /// Text that parses back to an expression with identical values.
  std::string to_string() const;

  explicit Expression(detail::NodePtr node) : node_(std::move(node)) {}

 private:
  detail::NodePtr node_;
};

// Folding constructors. They drop additive/multiplicative identities and
// fold constant operands; evaluated values are unchanged.
Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator+(const Expression& a, double b);
Expression operator+(double a, const Expression& b);
Expression operator-(const Expression& a, double b);
Expression operator-(double a, const Expression& b);
Expression operator*(const Expression& a, double b);
Expression operator*(double a, const Expression& b);
Expression operator/(const Expression& a, double b);
Expression operator/(double a, const Expression& b);

Expression pow(const Expression& base, int exponent);
Expression exp(const Expression& a);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression log(const Expression& a);
Expression flat(const Expression& a);

struct ParseOptions {
  int dimension = 1;
  bool allow_parameter = true;
  bool allow_jet_coordinates = false;
  int jet_components = 0;  // valid u<a>: 1..jet_components
  int jet_ranks = 0;       // valid ranks: 0..jet_ranks-1
};

/// Parses `text` per the expression grammar. Throws ParseError.
Expression parse(std::string_view text, int dimension);
Expression parse(std::string_view text, const ParseOptions& options);

/// Inputs for one evaluation.
struct EvalPoint {
  std::span<const double> x;
  std::optional<double> t;
  std::span<const double> jet;  // jet coordinate values, component-major
  int jet_stride = 0;           // number of ranks per component
};

/// An Expression compiled into a linear instruction tape. Evaluation is
/// re-entrant; a Program may be shared across threads.
class Program {
 public:
  enum class State : std::uint8_t { Ok, FlatZero, Error };

  struct Instr {
    NodeKind kind;
    int a = -1;
    int b = -1;
    int index = 0;
    int rank = 0;
    double value = 0.0;
  };

  explicit Program(const Expression& e);

  /// Throws DomainError or PreconditionError.
  double evaluate(const EvalPoint& point) const;
  double evaluate(std::span<const double> x,
                  std::optional<double> t = std::nullopt) const;

  const std::vector<Instr>& instructions() const noexcept { return code_; }
  int dimension() const noexcept { return dimension_; }
  bool has_parameter() const noexcept { return has_parameter_; }
  bool has_jet_coordinates() const noexcept { return has_jet_; }

 private:
  std::vector<Instr> code_;
  int dimension_ = 0;
  bool has_parameter_ = false;
  bool has_jet_ = false;
};

/// Convenience: compile and evaluate once.
double evaluate(const Expression& e, std::span<const double> x,
                std::optional<double> t = std::nullopt);
double evaluate(const Expression& e, std::initializer_list<double> x,
                std::optional<double> t = std::nullopt);

/// Exact symbolic derivative with respect to x_i (1-based).
Expression differentiate(const Expression& e, int i);

/// Replaces the parameter t by a constant.
Expression substitute_parameter(const Expression& e, double t);

/// Replaces x_i by `x_i + offset_i` for every i (used for shifted sections).
Expression shift_variables(const Expression& e, std::span<const double> offset);

}  // namespace jetcalc
