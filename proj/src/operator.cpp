#include "jetcalc/operator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "jetcalc/error.hpp"
#include "jetcalc/smooth.hpp"

namespace jetcalc {

Box Box::cube(int n, double lo, double hi) {
  if (n < 1) throw PreconditionError("box dimension must be >= 1");
  if (!(lo < hi)) throw PreconditionError("box bounds must satisfy lo < hi");
  return Box{std::vector<double>(static_cast<std::size_t>(n), lo), std::vector<double>(static_cast<std::size_t>(n), hi)};
}

Box Box::around(std::span<const double> c, double radius) {
  if (c.empty()) throw PreconditionError("box dimension must be >= 1");
  if (!(radius > 0.0)) throw PreconditionError("box radius must be > 0");
  Box b{std::vector<double>(c.begin(), c.end()), std::vector<double>(c.begin(), c.end())};
  for (std::size_t i = 0; i < c.size(); ++i) {
    b.lo[i] -= radius;
    b.hi[i] += radius;
  }
  return b;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------

Section::Section(int n, std::vector<Expression> components, std::optional<Box> domain)
    : n_(n), components_(std::move(components)) {
  if (n < 1) throw PreconditionError("section dimension must be >= 1");
  if (components_.empty()) throw PreconditionError("section needs at least one component");
  for (const auto& c : components_) {
    if (c.has_jet_coordinates()) throw PreconditionError("section components cannot use jet coordinates");
    if (c.dimension() > n)
      throw PreconditionError("section component references x" + std::to_string(c.dimension()) +
                              " but n = " + std::to_string(n));
    parametric_ = parametric_ || c.has_parameter();
  }
  domain_ = domain ? std::move(*domain) : Box::cube(n);
  if (domain_.dimension() != n) throw PreconditionError("section domain has the wrong dimension");
}

Section Section::scalar(const Expression& e, int n, std::optional<Box> domain) {
  return Section(n, {e}, std::move(domain));
}

Section Section::at_parameter(double t) const {
  if (!parametric_) return *this;
  std::vector<Expression> frozen;
  frozen.reserve(components_.size());
  for (const auto& c : components_) frozen.push_back(substitute_parameter(c, t));
  return Section(n_, std::move(frozen), domain_);
}

std::vector<double> Section::evaluate(std::span<const double> x) const {
  if (parametric_) throw PreconditionError("parametric section needs a parameter value");
  if (static_cast<int>(x.size()) != n_) throw PreconditionError("point has the wrong dimension");
  std::vector<double> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(jetcalc::evaluate(c, x));
  return out;
}

std::vector<Jet> Section::prolong(std::span<const double> x, int m) const {
  if (parametric_) throw PreconditionError("parametric section needs a parameter value");
  if (static_cast<int>(x.size()) != n_) throw PreconditionError("point has the wrong dimension");
  std::vector<Jet> jets;
  jets.reserve(components_.size());
  for (const auto& c : components_) jets.push_back(jetcalc::prolong(c, x, m));
  return jets;
}

// ---------------------------------------------------------------------------

JetOperator::JetOperator(int n, int r, int k, std::vector<Expression> exprs)
    : n_(n), r_(r), k_(k), exprs_(std::move(exprs)) {
  if (n < 1 || r < 1 || k < 0) throw PreconditionError("jet operator needs n >= 1, r >= 1, k >= 0");
  if (exprs_.empty()) throw PreconditionError("jet operator needs at least one target component");
  stride_ = static_cast<int>(mi_count(n, k));
  for (const auto& e : exprs_) {
    if (e.dimension() > n) throw PreconditionError("jet operator references a variable beyond n");
    if (e.has_parameter()) throw PreconditionError("jet operator cannot depend on t");
    if (e.max_jet_component() > r) throw PreconditionError("jet operator references a component beyond r");
    if (e.max_jet_rank() >= stride_)
      throw PreconditionError("jet coordinate rank " + std::to_string(e.max_jet_rank()) + " exceeds C(n+k,n) - 1 = " +
                              std::to_string(stride_ - 1));
  }
  auto programs = std::make_shared<std::vector<Program>>();
  programs->reserve(exprs_.size());
  for (const auto& e : exprs_) programs->emplace_back(e);
  programs_ = std::move(programs);
}

JetOperator JetOperator::parse(int n, int r, int k, const std::vector<std::string>& texts) {
  if (n < 1 || r < 1 || k < 0) throw PreconditionError("jet operator needs n >= 1, r >= 1, k >= 0");
  ParseOptions opts;
  opts.dimension = n;
  opts.allow_parameter = false;
  opts.allow_jet_coordinates = true;
  opts.jet_components = r;
  opts.jet_ranks = static_cast<int>(mi_count(n, k));
  std::vector<Expression> exprs;
  exprs.reserve(texts.size());
  for (const auto& t : texts) exprs.push_back(jetcalc::parse(t, opts));
  return JetOperator(n, r, k, std::move(exprs));
}

std::vector<double> JetOperator::evaluate(std::span<const double> x, const std::vector<Jet>& jets) const {
  if (static_cast<int>(x.size()) != n_) throw PreconditionError("point has the wrong dimension");
  if (static_cast<int>(jets.size()) != r_) throw PreconditionError("jet operator expects one jet per component");
  std::vector<double> coords(static_cast<std::size_t>(r_ * stride_));
  for (int a = 0; a < r_; ++a) {
    const Jet& J = jets[static_cast<std::size_t>(a)];
    if (J.order() < k_ || J.dimension() != n_) throw PreconditionError("jet has the wrong order or dimension");
    std::copy_n(J.coeffs().begin(), stride_, coords.begin() + a * stride_);
  }
  EvalPoint p{x, std::nullopt, coords, stride_};
  std::vector<double> out;
  out.reserve(programs_->size());
  for (const auto& prog : *programs_) out.push_back(prog.evaluate(p));
  return out;
}

std::vector<double> apply_jet_operator(const JetOperator& P, const Section& s, std::span<const double> x) {
  if (s.dimension() != P.dimension()) throw PreconditionError("section and operator dimensions differ");
  if (s.size() != P.components()) throw PreconditionError("section and operator component counts differ");
  if (!s.domain().contains(x)) throw PreconditionError("point lies outside the section domain");
  return P.evaluate(x, s.prolong(x, P.order()));
}

// ---------------------------------------------------------------------------

std::size_t UniversalFamily::coefficient_dimension() const {
  return static_cast<std::size_t>(r) * mi_count(n, k);
}

Expression centered_monomial(const MultiIndex& i, std::span<const double> base) {
  Expression term = Expression::constant(1.0);
  for (int v = 0; v < i.dimension(); ++v) {
    if (i[v] == 0) continue;
    Expression coord = Expression::variable(v + 1);
    double shift = base.empty() ? 0.0 : base[static_cast<std::size_t>(v)];
    if (shift != 0.0) coord = coord - shift;
    term = term * pow(coord, i[v]);
  }
  return term;
}

Section universal_section(const UniversalFamily& U, std::span<const double> f) {
  if (U.n < 1 || U.r < 1 || U.k < 0) throw PreconditionError("universal family needs n >= 1, r >= 1, k >= 0");
  if (f.size() != U.coefficient_dimension())
    throw PreconditionError("coefficient vector has length " + std::to_string(f.size()) + ", expected " +
                            std::to_string(U.coefficient_dimension()));
  const auto indices = mi_enumerate(U.n, U.k);
  std::vector<Expression> comps;
  for (int a = 0; a < U.r; ++a) {
    Expression sum;
    for (std::size_t j = 0; j < indices.size(); ++j) {
      double c = f[static_cast<std::size_t>(a) * indices.size() + j];
      if (c != 0.0) sum = sum + c * centered_monomial(indices[j], {});
    }
    comps.push_back(sum);
  }
  return Section(U.n, std::move(comps));
}

Section taylor_polynomial_section(const Jet& T) { return taylor_polynomial_section(std::vector<Jet>{T}); }

Section taylor_polynomial_section(const std::vector<Jet>& jets) {
  if (jets.empty()) throw PreconditionError("need at least one jet");
  const int n = jets.front().dimension();
  std::vector<Expression> comps;
  for (const auto& J : jets) {
    if (J.dimension() != n || J.base() != jets.front().base())
      throw PreconditionError("jets of a section must share their base point");
    comps.push_back(taylor_polynomial(J));
  }
  return Section(n, std::move(comps), Box::around(jets.front().base()));
}

// ---------------------------------------------------------------------------

OperatorHandle::OperatorHandle(OperatorMetadata meta, Evaluator fn) : meta_(std::move(meta)), fn_(std::move(fn)) {
  if (!fn_) throw PreconditionError("operator handle needs an evaluator");
}

std::vector<double> OperatorHandle::operator()(const Section& s, std::span<const double> x) const {
  if (!fn_) throw PreconditionError("empty operator handle");
  if (s.parametric()) throw PreconditionError("parametric section needs a parameter value");
  return fn_(s, x);
}

std::vector<double> OperatorHandle::operator()(const Section& s, std::span<const double> x, double t) const {
  return (*this)(s.at_parameter(t), x);
}

namespace {

double component_derivative(const Section& s, int a, std::span<const double> x, const MultiIndex& i) {
  Jet J = prolong(s.component(a), x, i.norm());
  return J[i];
}

}  // namespace

OperatorHandle from_jet_operator(const JetOperator& P) {
  OperatorMetadata meta;
  meta.name = "jet_operator";
  meta.local = true;
  meta.declared_order = P.order();
  meta.components = P.components();
  meta.targets = P.targets();
  std::vector<std::string> texts;
  for (const auto& e : P.expressions()) texts.push_back(e.to_string());
  meta.params = {{"dimension", P.dimension()}, {"components", P.components()}, {"order", P.order()}, {"exprs", texts}};
  return OperatorHandle(std::move(meta),
                        [P](const Section& s, std::span<const double> x) { return apply_jet_operator(P, s, x); });
}

OperatorHandle shift(std::vector<double> v) {
  if (v.empty()) throw PreconditionError("shift needs a non-empty offset");
  OperatorMetadata meta;
  meta.name = "shift";
  meta.local = false;
  meta.linear = true;
  meta.params = {{"v", v}};
  return OperatorHandle(std::move(meta), [v](const Section& s, std::span<const double> x) {
    if (x.size() != v.size()) throw PreconditionError("shift offset and point dimensions differ");
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += v[i];
    return s.evaluate(y);
  });
}

OperatorHandle square() {
  OperatorMetadata meta;
  meta.name = "square";
  meta.local = true;
  meta.linear = false;
  meta.declared_order = 0;
  return OperatorHandle(std::move(meta), [](const Section& s, std::span<const double> x) {
    auto v = s.evaluate(x);
    for (auto& c : v) c *= c;
    return v;
  });
}

OperatorHandle laplacian() {
  OperatorMetadata meta;
  meta.name = "laplacian";
  meta.local = true;
  meta.linear = true;
  meta.declared_order = 2;
  return OperatorHandle(std::move(meta), [](const Section& s, std::span<const double> x) {
    const int n = s.dimension();
    std::vector<double> out;
    for (int a = 0; a < s.size(); ++a) {
      Jet J = prolong(s.component(a), x, 2);
      double sum = 0.0;
      for (int i = 1; i <= n; ++i) {
        MultiIndex e = MultiIndex::unit(n, i);
        sum += J[e + e];
      }
      out.push_back(sum);
    }
    return out;
  });
}

OperatorHandle derivative(const MultiIndex& i) {
  OperatorMetadata meta;
  meta.name = "derivative";
  meta.local = true;
  meta.linear = true;
  meta.declared_order = i.norm();
  meta.params = {{"index", std::vector<int>(i.exponents().begin(), i.exponents().end())}};
  return OperatorHandle(std::move(meta), [i](const Section& s, std::span<const double> x) {
    if (s.dimension() != i.dimension()) throw PreconditionError("derivative index and section dimensions differ");
    std::vector<double> out;
    for (int a = 0; a < s.size(); ++a) out.push_back(component_derivative(s, a, x, i));
    return out;
  });
}

OperatorHandle pointwise_compose(const Expression& g) {
  if (g.dimension() > 1 || g.has_parameter() || g.has_jet_coordinates())
    throw PreconditionError("pointwise_compose needs g in the single variable x1");
  OperatorMetadata meta;
  meta.name = "pointwise_compose";
  meta.local = true;
  meta.declared_order = 0;
  meta.params = {{"g", g.to_string()}};
  auto prog = std::make_shared<const Program>(g);
  return OperatorHandle(std::move(meta), [prog](const Section& s, std::span<const double> x) {
    auto v = s.evaluate(x);
    for (auto& c : v) {
      double arg[1] = {c};
      c = prog->evaluate(std::span<const double>(arg, 1));
    }
    return v;
  });
}

OperatorHandle discontinuous_family() {
  OperatorMetadata meta;
  meta.name = "discontinuous_family";
  meta.local = true;
  meta.linear = false;
  meta.declared_order = 0;
  return OperatorHandle(std::move(meta), [](const Section& s, std::span<const double> x) {
    auto v = s.evaluate(x);
    for (auto& c : v) c += (c >= 0.0) ? 1.0 : 0.0;
    return v;
  });
}

OperatorHandle unbounded_order(std::vector<double> x0, int M) {
  if (x0.empty()) throw PreconditionError("unbounded_order needs a centre");
  if (M < 1) throw PreconditionError("unbounded_order needs M >= 1");
  OperatorMetadata meta;
  meta.name = "unbounded_order";
  meta.local = true;
  meta.linear = true;
  meta.params = {{"x0", x0}, {"M", M}};
  auto window = std::make_shared<const Program>(radial_bump(x0, 1.0, 2.0));
  return OperatorHandle(std::move(meta), [x0, M, window](const Section& s, std::span<const double> x) {
    if (x.size() != x0.size()) throw PreconditionError("unbounded_order centre and point dimensions differ");
    double rho = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rho += (x[i] - x0[i]) * (x[i] - x0[i]);
    const double dist = std::sqrt(rho);
    int d = M;
    if (dist > 0.0) {
      double c = std::ceil(1.0 / dist);
      if (c < static_cast<double>(M)) d = static_cast<int>(c);
    }
    const double w = window->evaluate(x);
    const int n = s.dimension();
    MultiIndex i = MultiIndex::unit(n, 1);
    MultiIndex di(n);
    for (int j = 0; j < d; ++j) di = di + i;
    std::vector<double> out;
    for (int a = 0; a < s.size(); ++a) out.push_back(w == 0.0 ? 0.0 : w * component_derivative(s, a, x, di));
    return out;
  });
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"jet_operator", "shift",    "square",
                                              "laplacian",    "derivative", "pointwise_compose",
                                              "discontinuous_family", "unbounded_order"};
  return names;
}

namespace {

std::vector<double> point_param(const nlohmann::json& params, const char* key) {
  if (!params.contains(key)) throw PreconditionError(std::string("missing parameter '") + key + "'");
  const auto& v = params.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw PreconditionError(std::string("parameter '") + key + "' must be a point");
  std::vector<double> out;
  for (const auto& c : v) {
    if (!c.is_number()) throw PreconditionError(std::string("parameter '") + key + "' must be numeric");
    out.push_back(c.get<double>());
  }
  return out;
}

int int_param(const nlohmann::json& params, const char* key, int fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number_integer()) throw PreconditionError(std::string("parameter '") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

OperatorHandle catalog_make(const std::string& name, const nlohmann::json& params) {
  if (!params.is_object()) throw PreconditionError("operator parameters must be a JSON object");
  if (name == "jet_operator") {
    int n = int_param(params, "dimension", 1);
    int r = int_param(params, "components", 1);
    int k = int_param(params, "order", 0);
    if (!params.contains("exprs") || !params.at("exprs").is_array())
      throw PreconditionError("jet_operator needs an 'exprs' array");
    std::vector<std::string> texts;
    for (const auto& e : params.at("exprs")) {
      if (!e.is_string()) throw PreconditionError("jet_operator expressions must be strings");
      texts.push_back(e.get<std::string>());
    }
    return from_jet_operator(JetOperator::parse(n, r, k, texts));
  }
  if (name == "shift") return shift(point_param(params, "v"));
  if (name == "square") return square();
  if (name == "laplacian") return laplacian();
  if (name == "derivative") {
    auto raw = point_param(params, "index");
    std::vector<int> r;
    for (double v : raw) {
      if (v < 0 || v != std::floor(v)) throw PreconditionError("derivative index entries must be non-negative integers");
      r.push_back(static_cast<int>(v));
    }
    return derivative(MultiIndex(std::move(r)));
  }
  if (name == "pointwise_compose") {
    if (!params.contains("g") || !params.at("g").is_string())
      throw PreconditionError("pointwise_compose needs a string parameter 'g'");
    ParseOptions opts;
    opts.dimension = 1;
    opts.allow_parameter = false;
    return pointwise_compose(parse(params.at("g").get<std::string>(), opts));
  }
  if (name == "discontinuous_family") return discontinuous_family();
  if (name == "unbounded_order") {
    std::vector<double> x0 = params.contains("x0") ? point_param(params, "x0") : std::vector<double>{0.0};
    return unbounded_order(std::move(x0), int_param(params, "M", 8));
  }
  throw PreconditionError("unknown operator '" + name + "'");
}

}  // namespace jetcalc
