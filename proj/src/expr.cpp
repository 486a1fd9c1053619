#include "jetcalc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include "jetcalc/error.hpp"

namespace jetcalc {

namespace {

using detail::Node;
using detail::NodePtr;

NodePtr make_node(Node node) {
  if (node.lhs) {
    node.max_variable = std::max(node.max_variable, node.lhs->max_variable);
    node.has_parameter = node.has_parameter || node.lhs->has_parameter;
    node.has_jet_coordinates =
        node.has_jet_coordinates || node.lhs->has_jet_coordinates;
    node.max_component = std::max(node.max_component, node.lhs->max_component);
    node.max_rank = std::max(node.max_rank, node.lhs->max_rank);
  }
  if (node.rhs) {
    node.max_variable = std::max(node.max_variable, node.rhs->max_variable);
    node.has_parameter = node.has_parameter || node.rhs->has_parameter;
    node.has_jet_coordinates =
        node.has_jet_coordinates || node.rhs->has_jet_coordinates;
    node.max_component = std::max(node.max_component, node.rhs->max_component);
    node.max_rank = std::max(node.max_rank, node.rhs->max_rank);
  }
  return std::make_shared<const Node>(std::move(node));
}

bool is_unary(NodeKind k) {
  switch (k) {
    case NodeKind::Neg:
    case NodeKind::Exp:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Log:
    case NodeKind::Flat:
    case NodeKind::Pow:
      return true;
    default:
      return false;
  }
}

bool is_binary(NodeKind k) {
  return k == NodeKind::Add || k == NodeKind::Sub || k == NodeKind::Mul ||
         k == NodeKind::Div;
}

double ipow(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::constant(double value) {
  Node n;
  n.kind = NodeKind::Constant;
  n.value = value;
  return Expression(make_node(std::move(n)));
}

Expression Expression::variable(int i) {
  if (i < 1) throw PreconditionError("variable indices start at 1");
  Node n;
  n.kind = NodeKind::Variable;
  n.index = i - 1;
  n.max_variable = i;
  return Expression(make_node(std::move(n)));
}

Expression Expression::parameter() {
  Node n;
  n.kind = NodeKind::Parameter;
  n.has_parameter = true;
  return Expression(make_node(std::move(n)));
}

Expression Expression::jet_coordinate(int component, int rank) {
  if (component < 1 || rank < 0)
    throw PreconditionError("invalid jet coordinate");
  Node n;
  n.kind = NodeKind::JetCoord;
  n.index = component - 1;
  n.rank = rank;
  n.has_jet_coordinates = true;
  n.max_component = component;
  n.max_rank = rank;
  return Expression(make_node(std::move(n)));
}

Expression Expression::raw_unary(NodeKind kind, const Expression& arg) {
  if (!is_unary(kind) || kind == NodeKind::Pow)
    throw PreconditionError("raw_unary: not a unary kind");
  Node n;
  n.kind = kind;
  n.lhs = arg.node();
  return Expression(make_node(std::move(n)));
}

Expression Expression::raw_binary(NodeKind kind, const Expression& lhs,
                                  const Expression& rhs) {
  if (!is_binary(kind)) throw PreconditionError("raw_binary: not a binary kind");
  Node n;
  n.kind = kind;
  n.lhs = lhs.node();
  n.rhs = rhs.node();
  return Expression(make_node(std::move(n)));
}

Expression Expression::raw_pow(const Expression& base, int exponent) {
  if (exponent < 0) throw PreconditionError("negative exponent");
  Node n;
  n.kind = NodeKind::Pow;
  n.index = exponent;
  n.lhs = base.node();
  return Expression(make_node(std::move(n)));
}

std::size_t Expression::node_count() const {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->lhs) stack.push_back(n->lhs.get());
    if (n->rhs) stack.push_back(n->rhs.get());
  }
  return seen.size();
}

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() + b.constant_value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expression::raw_binary(NodeKind::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() - b.constant_value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expression::raw_binary(NodeKind::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant())
    return Expression::constant(a.constant_value() * b.constant_value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expression::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expression::raw_binary(NodeKind::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
    return Expression::constant(a.constant_value() / b.constant_value());
  if (a.is_constant(0.0)) return Expression::constant(0.0);
  if (b.is_constant(1.0)) return a;
  return Expression::raw_binary(NodeKind::Div, a, b);
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.kind() == NodeKind::Neg) return a.lhs();
  return Expression::raw_unary(NodeKind::Neg, a);
}

Expression operator+(const Expression& a, double b) { return a + Expression::constant(b); }
Expression operator+(double a, const Expression& b) { return Expression::constant(a) + b; }
Expression operator-(const Expression& a, double b) { return a - Expression::constant(b); }
Expression operator-(double a, const Expression& b) { return Expression::constant(a) - b; }
Expression operator*(const Expression& a, double b) { return a * Expression::constant(b); }
Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }
Expression operator/(const Expression& a, double b) { return a / Expression::constant(b); }
Expression operator/(double a, const Expression& b) { return Expression::constant(a) / b; }

Expression pow(const Expression& base, int exponent) {
  if (exponent < 0) throw PreconditionError("negative exponent");
  if (exponent == 0) return Expression::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant())
    return Expression::constant(ipow(base.constant_value(), exponent));
  return Expression::raw_pow(base, exponent);
}

Expression exp(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::exp(a.constant_value()));
  return Expression::raw_unary(NodeKind::Exp, a);
}

Expression sin(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::sin(a.constant_value()));
  return Expression::raw_unary(NodeKind::Sin, a);
}

Expression cos(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::cos(a.constant_value()));
  return Expression::raw_unary(NodeKind::Cos, a);
}

Expression log(const Expression& a) {
  if (a.is_constant() && a.constant_value() > 0.0)
    return Expression::constant(std::log(a.constant_value()));
  return Expression::raw_unary(NodeKind::Log, a);
}

// Never folded: flat of a non-positive constant carries the flat-zero tag.
Expression flat(const Expression& a) {
  return Expression::raw_unary(NodeKind::Flat, a);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_number(double v) {
  if (!std::isfinite(v)) throw PreconditionError("cannot print non-finite constant");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const char* function_name(NodeKind k) {
  switch (k) {
    case NodeKind::Exp: return "exp";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Log: return "log";
    case NodeKind::Flat: return "flat";
    default: return "";
  }
}

int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

void print(const Node& n, int min_prec, std::string& out) {
  const bool paren = precedence(n) < min_prec;
  if (paren) out += '(';
  switch (n.kind) {
    case NodeKind::Constant:
      if (n.value < 0.0 || (n.value == 0.0 && std::signbit(n.value))) {
        out += "(-";
        out += format_number(-n.value);
        out += ')';
      } else {
        out += format_number(n.value);
      }
      break;
    case NodeKind::Variable:
      out += 'x';
      out += std::to_string(n.index + 1);
      break;
    case NodeKind::Parameter:
      out += 't';
      break;
    case NodeKind::JetCoord:
      out += 'u';
      out += std::to_string(n.index + 1);
      out += '_';
      out += std::to_string(n.rank);
      break;
    case NodeKind::Neg:
      out += '-';
      print(*n.lhs, 3, out);
      break;
    case NodeKind::Add:
    case NodeKind::Sub:
      print(*n.lhs, 1, out);
      out += n.kind == NodeKind::Add ? " + " : " - ";
      print(*n.rhs, 2, out);
      break;
    case NodeKind::Mul:
    case NodeKind::Div:
      print(*n.lhs, 2, out);
      out += n.kind == NodeKind::Mul ? "*" : "/";
      print(*n.rhs, 3, out);
      break;
    case NodeKind::Pow:
      print(*n.lhs, 5, out);
      out += '^';
      out += std::to_string(n.index);
      break;
    case NodeKind::Exp:
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Log:
    case NodeKind::Flat:
      out += function_name(n.kind);
      out += '(';
      print(*n.lhs, 0, out);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  print(*node_, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& opt) : text_(text), opt_(opt) {}

  Expression run() {
    if (opt_.dimension < 1) throw PreconditionError("dimension must be positive");
    Expression e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    throw ParseError(msg, at);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expression::raw_binary(NodeKind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expression::raw_binary(NodeKind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expression term() {
    Expression lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expression::raw_binary(NodeKind::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = Expression::raw_binary(NodeKind::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expression factor() {
    if (accept('-')) {
      Expression operand = factor();
      if (operand.is_constant()) return Expression::constant(-operand.constant_value());
      return Expression::raw_unary(NodeKind::Neg, operand);
    }
    Expression b = base();
    if (accept('^')) {
      skip_ws();
      return Expression::raw_pow(b, integer("expected non-negative integer exponent"));
    }
    return b;
  }

  int integer(const char* what) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) fail(what);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) fail_at("integer out of range", start);
    return value;
  }

  Expression number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t d = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++d;
      }
      return d;
    };
    std::size_t nd = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) fail_at("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail("malformed exponent in number");
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) fail_at("number out of range", start);
    return Expression::constant(value);
  }

  Expression base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expression e = expr();
      expect(')');
      return e;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected character '") + c + "'");

    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);

    if (word == "x") {
      const int i = integer("expected variable index after 'x'");
      if (i < 1) fail_at("variable indices start at 1", start);
      if (i > opt_.dimension)
        fail_at("variable index " + std::to_string(i) + " exceeds dimension " +
                    std::to_string(opt_.dimension),
                start);
      return Expression::variable(i);
    }
    if (word == "t") {
      if (!opt_.allow_parameter) fail_at("parameter 't' not allowed here", start);
      return Expression::parameter();
    }
    if (word == "u") {
      if (!opt_.allow_jet_coordinates) fail_at("jet coordinates not allowed here", start);
      const int a = integer("expected component index after 'u'");
      if (pos_ >= text_.size() || text_[pos_] != '_') fail("expected '_' in jet coordinate");
      ++pos_;
      const int rank = integer("expected rank in jet coordinate");
      if (a < 1 || a > opt_.jet_components)
        fail_at("jet component " + std::to_string(a) + " out of range 1.." +
                    std::to_string(opt_.jet_components),
                start);
      if (rank >= opt_.jet_ranks)
        fail_at("jet rank " + std::to_string(rank) + " exceeds operator order", start);
      return Expression::jet_coordinate(a, rank);
    }

    NodeKind kind;
    if (word == "exp") kind = NodeKind::Exp;
    else if (word == "sin") kind = NodeKind::Sin;
    else if (word == "cos") kind = NodeKind::Cos;
    else if (word == "log") kind = NodeKind::Log;
    else if (word == "flat") kind = NodeKind::Flat;
    else fail_at("unknown identifier '" + std::string(word) + "'", start);

    expect('(');
    Expression arg = expr();
    expect(')');
    return Expression::raw_unary(kind, arg);
  }

  std::string_view text_;
  ParseOptions opt_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view text, int dimension) {
  ParseOptions opt;
  opt.dimension = dimension;
  return parse(text, opt);
}

Expression parse(std::string_view text, const ParseOptions& options) {
  return Parser(text, options).run();
}

// ---------------------------------------------------------------------------
// Evaluation

Program::Program(const Expression& e) {
  dimension_ = e.dimension();
  has_parameter_ = e.has_parameter();
  has_jet_ = e.has_jet_coordinates();

  std::unordered_map<const Node*, int> slot;
  // Iterative post-order traversal.
  std::vector<std::pair<const Node*, bool>> stack{{e.node().get(), false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (slot.count(n)) continue;
    if (!expanded) {
      stack.push_back({n, true});
      if (n->rhs && !slot.count(n->rhs.get())) stack.push_back({n->rhs.get(), false});
      if (n->lhs && !slot.count(n->lhs.get())) stack.push_back({n->lhs.get(), false});
      continue;
    }
    Instr ins;
    ins.kind = n->kind;
    ins.value = n->value;
    ins.index = n->index;
    ins.rank = n->rank;
    if (n->lhs) ins.a = slot.at(n->lhs.get());
    if (n->rhs) ins.b = slot.at(n->rhs.get());
    slot.emplace(n, static_cast<int>(code_.size()));
    code_.push_back(ins);
  }
}

namespace {

struct Slot {
  double v;
  Program::State s;
  int origin;  // instruction that raised an error
};

std::string error_message(const Program::Instr& ins) {
  switch (ins.kind) {
    case NodeKind::Div: return "division by zero";
    case NodeKind::Log: return "log of non-positive argument";
    default: return "non-finite intermediate value";
  }
}

}  // namespace

double Program::evaluate(std::span<const double> x, std::optional<double> t) const {
  EvalPoint p;
  p.x = x;
  p.t = t;
  return evaluate(p);
}

double Program::evaluate(const EvalPoint& p) const {
  if (static_cast<int>(p.x.size()) < dimension_)
    throw PreconditionError("point has dimension " + std::to_string(p.x.size()) +
                            " but expression uses x" + std::to_string(dimension_));
  if (has_parameter_ && !p.t)
    throw PreconditionError("expression depends on t but no parameter value given");

  using S = State;
  std::vector<Slot> r(code_.size());
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    const int self = static_cast<int>(i);
    Slot out{0.0, S::Ok, -1};
    auto err = [&](int origin) { out = Slot{0.0, S::Error, origin}; };
    auto ok = [&](double v) {
      if (std::isfinite(v)) out = Slot{v, S::Ok, -1};
      else err(self);
    };
    switch (ins.kind) {
      case NodeKind::Constant: out.v = ins.value; break;
      case NodeKind::Variable: out.v = p.x[ins.index]; break;
      case NodeKind::Parameter: out.v = *p.t; break;
      case NodeKind::JetCoord: {
        const std::size_t k = static_cast<std::size_t>(ins.index) * p.jet_stride + ins.rank;
        if (ins.rank >= p.jet_stride || k >= p.jet.size())
          throw PreconditionError("jet coordinate u" + std::to_string(ins.index + 1) + "_" +
                                  std::to_string(ins.rank) + " not supplied");
        out.v = p.jet[k];
        break;
      }
      case NodeKind::Neg: {
        const Slot& a = r[ins.a];
        out = a;
        out.v = -a.v;
        break;
      }
      case NodeKind::Add:
      case NodeKind::Sub: {
        const Slot& a = r[ins.a];
        const Slot& b = r[ins.b];
        if (a.s == S::Error) err(a.origin);
        else if (b.s == S::Error) err(b.origin);
        else if (a.s == S::FlatZero && b.s == S::FlatZero) out = Slot{0.0, S::FlatZero, -1};
        else ok(ins.kind == NodeKind::Add ? a.v + b.v : a.v - b.v);
        break;
      }
      case NodeKind::Mul: {
        const Slot& a = r[ins.a];
        const Slot& b = r[ins.b];
        if (a.s == S::FlatZero || b.s == S::FlatZero) out = Slot{0.0, S::FlatZero, -1};
        else if (a.s == S::Error) err(a.origin);
        else if (b.s == S::Error) err(b.origin);
        else ok(a.v * b.v);
        break;
      }
      case NodeKind::Div: {
        const Slot& a = r[ins.a];
        const Slot& b = r[ins.b];
        if (a.s == S::FlatZero) out = Slot{0.0, S::FlatZero, -1};
        else if (a.s == S::Error) err(a.origin);
        else if (b.s == S::Error) err(b.origin);
        else if (b.s == S::FlatZero || b.v == 0.0) err(self);
        else ok(a.v / b.v);
        break;
      }
      case NodeKind::Pow: {
        const Slot& a = r[ins.a];
        if (a.s == S::Error) err(a.origin);
        else if (ins.index == 0) out.v = 1.0;
        else if (a.s == S::FlatZero) out = Slot{0.0, S::FlatZero, -1};
        else ok(ipow(a.v, ins.index));
        break;
      }
      case NodeKind::Exp:
      case NodeKind::Sin:
      case NodeKind::Cos: {
        const Slot& a = r[ins.a];
        if (a.s == S::Error) {
          err(a.origin);
        } else {
          const double v = a.v;
          ok(ins.kind == NodeKind::Exp ? std::exp(v)
             : ins.kind == NodeKind::Sin ? std::sin(v)
                                         : std::cos(v));
        }
        break;
      }
      case NodeKind::Log: {
        const Slot& a = r[ins.a];
        if (a.s == S::Error) err(a.origin);
        else if (a.s == S::FlatZero || a.v <= 0.0) err(self);
        else ok(std::log(a.v));
        break;
      }
      case NodeKind::Flat: {
        const Slot& a = r[ins.a];
        if (a.s == S::Error) {
          err(a.origin);
        } else if (a.s == S::FlatZero || a.v <= 0.0) {
          out = Slot{0.0, S::FlatZero, -1};
        } else {
          const double v = std::exp(-1.0 / a.v);
          if (v == 0.0) out = Slot{0.0, S::FlatZero, -1};
          else out.v = v;
        }
        break;
      }
    }
    r[i] = out;
  }
  const Slot& root = r.back();
  if (root.s == S::Error) throw DomainError(error_message(code_[root.origin]));
  return root.s == S::FlatZero ? 0.0 : root.v;
}

double evaluate(const Expression& e, std::span<const double> x, std::optional<double> t) {
  return Program(e).evaluate(x, t);
}

double evaluate(const Expression& e, std::initializer_list<double> x, std::optional<double> t) {
  return Program(e).evaluate(std::span<const double>(x.begin(), x.size()), t);
}

// ---------------------------------------------------------------------------
// Differentiation and rewriting

namespace {

class Differentiator {
 public:
  explicit Differentiator(int var) : var_(var) {}

  Expression d(const Expression& e) {
    const Node* key = e.node().get();
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Expression result = compute(e);
    memo_.emplace(key, result);
    return result;
  }

 private:
  Expression compute(const Expression& e) {
    const auto zero = Expression::constant(0.0);
    switch (e.kind()) {
      case NodeKind::Constant:
      case NodeKind::Parameter:
      case NodeKind::JetCoord:
        return zero;
      case NodeKind::Variable:
        return Expression::constant(e.node()->index == var_ ? 1.0 : 0.0);
      case NodeKind::Neg:
        return -d(e.lhs());
      case NodeKind::Add:
        return d(e.lhs()) + d(e.rhs());
      case NodeKind::Sub:
        return d(e.lhs()) - d(e.rhs());
      case NodeKind::Mul: {
        const Expression a = e.lhs(), b = e.rhs();
        return d(a) * b + a * d(b);
      }
      case NodeKind::Div: {
        const Expression a = e.lhs(), b = e.rhs();
        const Expression da = d(a), db = d(b);
        if (db.is_constant(0.0)) return da / b;
        // (a/b)' = (a' - (a/b) b') / b keeps the denominator from growing
        // with each differentiation.
        return (da - e * db) / b;
      }
      case NodeKind::Pow: {
        const int k = e.node()->index;
        const Expression a = e.lhs();
        if (k == 0) return zero;
        return (static_cast<double>(k) * pow(a, k - 1)) * d(a);
      }
      case NodeKind::Exp:
        return e * d(e.lhs());
      case NodeKind::Sin:
        return cos(e.lhs()) * d(e.lhs());
      case NodeKind::Cos:
        return -(sin(e.lhs()) * d(e.lhs()));
      case NodeKind::Log:
        return d(e.lhs()) / e.lhs();
      case NodeKind::Flat: {
        // flat'(u) = flat(u) / u^2; the product keeps the flat factor so the
        // flat-zero convention covers every higher derivative.
        const Expression u = e.lhs();
        const Expression du = d(u);
        if (du.is_constant(0.0)) return zero;
        return (du / pow(u, 2)) * e;
      }
    }
    return zero;
  }

  int var_;
  std::unordered_map<const Node*, Expression> memo_;
};

// Rebuilds a DAG, replacing leaves via `leaf`. Interior nodes are rebuilt
// with raw constructors so the tree shape is kept.
class Rewriter {
 public:
  explicit Rewriter(std::function<std::optional<Expression>(const Expression&)> leaf)
      : leaf_(std::move(leaf)) {}

  Expression run(const Expression& e) {
    const Node* key = e.node().get();
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Expression out = e;
    if (auto repl = leaf_(e)) {
      out = *repl;
    } else if (e.kind() == NodeKind::Pow) {
      out = Expression::raw_pow(run(e.lhs()), e.node()->index);
    } else if (is_binary(e.kind())) {
      out = Expression::raw_binary(e.kind(), run(e.lhs()), run(e.rhs()));
    } else if (is_unary(e.kind())) {
      out = Expression::raw_unary(e.kind(), run(e.lhs()));
    }
    memo_.emplace(key, out);
    return out;
  }

 private:
  std::function<std::optional<Expression>(const Expression&)> leaf_;
  std::unordered_map<const Node*, Expression> memo_;
};

}  // namespace

Expression differentiate(const Expression& e, int i) {
  if (i < 1) throw PreconditionError("variable indices start at 1");
  return Differentiator(i - 1).d(e);
}

Expression substitute_parameter(const Expression& e, double t) {
  if (!e.has_parameter()) return e;
  return Rewriter([t](const Expression& n) -> std::optional<Expression> {
           if (n.kind() == NodeKind::Parameter) return Expression::constant(t);
           return std::nullopt;
         })
      .run(e);
}

Expression shift_variables(const Expression& e, std::span<const double> offset) {
  return Rewriter([offset](const Expression& n) -> std::optional<Expression> {
           if (n.kind() != NodeKind::Variable) return std::nullopt;
           const auto i = static_cast<std::size_t>(n.node()->index);
           if (i >= offset.size() || offset[i] == 0.0) return n;
           return Expression::raw_binary(NodeKind::Add, n, Expression::constant(offset[i]));
         })
      .run(e);
}

}  // namespace jetcalc
