#include "jetcalc/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jetcalc/error.hpp"
#include "jetcalc/parallel.hpp"
#include "jetcalc/random.hpp"
#include "jetcalc/smooth.hpp"

namespace jetcalc {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Evaluates d^J / J! for every |J| <= m in graded-lex order.
class MonomialTable {
 public:
  MonomialTable(int n, int m) : table_(index_table(n, m)) {
    const auto& t = *table_;
    parent_.assign(t.size(), 0);
    axis_.assign(t.size(), 0);
    for (std::size_t r = 1; r < t.size(); ++r) {
      const int p = t.pivot[r];
      std::vector<int> e(t.indices[r].exponents().begin(), t.indices[r].exponents().end());
      --e[static_cast<std::size_t>(p)];
      parent_[r] = mi_rank(MultiIndex(std::move(e)));
      axis_[r] = p;
    }
  }

  void fill(std::span<const double> d, std::vector<double>& out) const {
    const auto& t = *table_;
    out.resize(t.size());
    out[0] = 1.0;
    for (std::size_t r = 1; r < t.size(); ++r) {
      const int p = axis_[r];
      out[r] = out[parent_[r]] * d[static_cast<std::size_t>(p)] / t.indices[r][p];
    }
  }

  const IndexTable& table() const { return *table_; }

 private:
  std::shared_ptr<const IndexTable> table_;
  std::vector<std::size_t> parent_;
  std::vector<int> axis_;
};

// rank of I + J in an order-`order` table, for each |J| <= m
std::vector<std::size_t> shifted_ranks(const MultiIndex& i, int m) {
  std::vector<std::size_t> out;
  for (const auto& j : mi_enumerate(i.dimension(), m)) out.push_back(mi_rank(i + j));
  return out;
}

double remainder_with(const Jet& Tx, double lambda_y, const std::vector<std::size_t>& ranks,
                      const std::vector<double>& mono) {
  double s = 0.0;
  for (std::size_t k = 0; k < ranks.size(); ++k) s += Tx.coeffs()[ranks[k]] * mono[k];
  return std::abs(lambda_y - s);
}

WhitneyReport empty_report(int n, int m, const std::vector<double>& scales, const ToleranceRule& tol) {
  WhitneyReport report;
  report.m = m;
  report.scales = scales;
  for (const auto& idx : mi_enumerate(n, m)) {
    IndexVerdict e;
    e.index = idx;
    for (double d : scales) {
      ScaleVerdict s;
      s.delta = d;
      s.tolerance = tol(d);
      e.scales.push_back(s);
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

void finish(WhitneyReport& report) {
  for (auto& e : report.entries)
    for (auto& s : e.scales) s.holds = s.vacuous || s.modulus <= s.tolerance;
}

struct Best {
  double value = -1.0;
  std::size_t from = 0, to = 0;
  std::size_t pairs = 0;
};

}  // namespace

double taylor_remainder(const Jet& Tx, const Jet& Ty, const MultiIndex& i, int m) {
  if (Tx.dimension() != Ty.dimension() || i.dimension() != Tx.dimension())
    throw PreconditionError("jets and multi-index must share dimension");
  if (m < 0) throw PreconditionError("order m must be non-negative");
  if (Tx.order() < i.norm() + m)
    throw PreconditionError("jet at x has order " + std::to_string(Tx.order()) + " but (I, m) needs " +
                            std::to_string(i.norm() + m));
  if (Ty.order() < i.norm())
    throw PreconditionError("jet at y has order " + std::to_string(Ty.order()) + " but I needs " +
                            std::to_string(i.norm()));
  const int n = Tx.dimension();
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) d[k] = Ty.base()[k] - Tx.base()[k];
  std::vector<double> mono;
  MonomialTable(n, m).fill(d, mono);
  return remainder_with(Tx, Ty[i], shifted_ranks(i, m), mono);
}

bool WhitneyReport::holds_at(std::size_t scale) const {
  for (const auto& e : entries)
    if (!e.scales.at(scale).holds) return false;
  return true;
}

bool WhitneyReport::holds() const {
  for (std::size_t s = 0; s < scales.size(); ++s)
    if (!holds_at(s)) return false;
  return true;
}

double WhitneyReport::modulus_at(std::size_t scale) const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.scales.at(scale).modulus);
  return w;
}

WhitneyReport check_taylor_condition(const JetFamily& family, int m, const std::vector<double>& scales,
                                     const ToleranceRule& tol, int jobs) {
  family.validate();
  if (m < 0) throw PreconditionError("order m must be non-negative");
  if (family.order < 2 * m)
    throw PreconditionError("family order " + std::to_string(family.order) + " is below 2m = " +
                            std::to_string(2 * m));
  const int n = family.dimension;
  WhitneyReport report = empty_report(n, m, scales, tol);
  const auto& pts = family.entries;
  const std::size_t N = pts.size();
  const std::size_t nI = report.entries.size(), nS = scales.size();

  std::vector<std::vector<std::size_t>> ranks;
  std::vector<std::size_t> own_rank;
  for (const auto& e : report.entries) {
    ranks.push_back(shifted_ranks(e.index, m));
    own_rank.push_back(mi_rank(e.index));
  }
  const MonomialTable monomials(n, m);

  // rows[a][I * nS + s]: best pair expanding at a
  std::vector<std::vector<Best>> rows(N);
  parallel_for(N, jobs, [&](std::size_t a) {
    auto& row = rows[a];
    row.assign(nI * nS, Best{});
    std::vector<double> d(static_cast<std::size_t>(n)), mono;
    for (std::size_t b = 0; b < N; ++b) {
      if (b == a) continue;
      const double dist = distance(pts[a].base(), pts[b].base());
      bool any = false;
      for (double delta : scales) any = any || dist <= delta;
      if (!any) continue;
      for (int k = 0; k < n; ++k) d[k] = pts[b].base()[k] - pts[a].base()[k];
      monomials.fill(d, mono);
      const double denom = std::pow(dist, m);
      for (std::size_t I = 0; I < nI; ++I) {
        const double ratio = remainder_with(pts[a], pts[b].coeffs()[own_rank[I]], ranks[I], mono) / denom;
        for (std::size_t s = 0; s < nS; ++s) {
          if (dist > scales[s]) continue;
          Best& best = row[I * nS + s];
          ++best.pairs;
          if (ratio > best.value) best = Best{ratio, a, b, best.pairs};
        }
      }
    }
  });

  for (std::size_t I = 0; I < nI; ++I) {
    for (std::size_t s = 0; s < nS; ++s) {
      ScaleVerdict& v = report.entries[I].scales[s];
      Best best;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < N; ++a) {
        const Best& r = rows[a][I * nS + s];
        pairs += r.pairs;
        if (r.pairs > 0 && r.value > best.value) best = r;
      }
      v.pairs = pairs;
      if (pairs == 0) continue;
      v.vacuous = false;
      v.modulus = best.value;
      v.witness_from = pts[best.from].base();
      v.witness_to = pts[best.to].base();
    }
  }
  finish(report);
  return report;
}

WhitneyReport check_decay(const JetFamily& family, int m, const std::vector<double>& scales,
                          const ToleranceRule& tol) {
  family.validate();
  if (m < 0) throw PreconditionError("order m must be non-negative");
  const int n = family.dimension;
  const std::vector<double> origin(static_cast<std::size_t>(n), 0.0);
  const std::vector<double>& limit = family.limit ? family.limit->base() : origin;
  if (family.limit)
    for (double c : family.limit->coeffs())
      if (c != 0.0) throw PreconditionError("limit jet must be zero");

  // Against the zero jet at the limit the remainder is |lambda_{I,a_k}|.
  WhitneyReport report = empty_report(n, family.order, scales, tol);
  report.m = m;
  for (auto& e : report.entries) {
    const std::size_t rank = mi_rank(e.index);
    for (auto& v : e.scales) {
      double best = -1.0;
      const Jet* arg = nullptr;
      for (const auto& T : family.entries) {
        const double dist = distance(T.base(), limit);
        if (dist > v.delta) continue;
        ++v.pairs;
        const double ratio = std::abs(T.coeffs()[rank]) / std::pow(dist, m);
        if (ratio > best) {
          best = ratio;
          arg = &T;
        }
      }
      if (!arg) continue;
      v.vacuous = false;
      v.modulus = best;
      v.witness_from = limit;
      v.witness_to = arg->base();
    }
  }
  finish(report);
  return report;
}

// ---------------------------------------------------------------------------

const char* to_string(ConeRegion r) {
  switch (r) {
    case ConeRegion::K1: return "K1";
    case ConeRegion::K2: return "K2";
    case ConeRegion::Apex: return "apex";
    case ConeRegion::Outside: return "outside";
  }
  return "outside";
}

ConeRegion cone_membership(std::span<const double> x, const ConeGeometry& geom) {
  if (static_cast<int>(x.size()) != geom.n) throw PreconditionError("point dimension does not match cone");
  const double xn = x.back();
  double q = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) q += x[i] * x[i];
  if (q == 0.0 && xn == 0.0) return ConeRegion::Apex;
  if (std::abs(xn) > 1.0 || q > xn * xn) return ConeRegion::Outside;
  return xn > 0.0 ? ConeRegion::K1 : ConeRegion::K2;
}

std::vector<std::vector<double>> sample_nappe(const ConeGeometry& geom, ConeRegion nappe, std::size_t count,
                                              std::uint64_t seed, double min_norm) {
  if (nappe != ConeRegion::K1 && nappe != ConeRegion::K2) throw PreconditionError("sample_nappe needs K1 or K2");
  if (!(min_norm > 0.0 && min_norm < 1.0)) throw PreconditionError("min_norm must lie in (0, 1)");
  Rng rng(seed, {nappe == ConeRegion::K1 ? 1u : 2u});
  const int n = geom.n;
  std::vector<std::vector<double>> out;
  out.reserve(count);
  while (out.size() < count) {
    const double h = rng.uniform(min_norm, 1.0);
    std::vector<double> x(static_cast<std::size_t>(n));
    double q;
    do {
      q = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        x[i] = rng.uniform(-1.0, 1.0);
        q += x[i] * x[i];
      }
    } while (q > 1.0);
    for (int i = 0; i + 1 < n; ++i) x[i] *= h;
    x.back() = nappe == ConeRegion::K1 ? h : -h;
    if (cone_membership(x, geom) == nappe) out.push_back(std::move(x));
  }
  return out;
}

Expression angular_cutoff(int n) {
  if (n < 1) throw PreconditionError("cone dimension must be positive");
  Expression rho;
  for (int i = 1; i <= n; ++i) rho = rho + pow(Expression::variable(i), 2);
  // x_n / |x| written with exp/log so that it stays inside the grammar
  const Expression s = Expression::variable(n) * exp(-0.5 * log(rho));
  return smooth_step(s, 0.0, 1.0 / std::sqrt(2.0));
}

double ConeGlue::operator()(std::span<const double> x) const {
  double rho = 0.0;
  for (double c : x) rho += c * c;
  if (rho == 0.0) return v_->evaluate(x);
  return f_->evaluate(x);
}

ConeGlue cone_glue(const Expression& u, const Expression& v, const ConeGeometry& geom, int m) {
  if (u.dimension() > geom.n || v.dimension() > geom.n)
    throw PreconditionError("u and v must be expressions in x1..x" + std::to_string(geom.n));
  if (u.has_parameter() || v.has_parameter()) throw PreconditionError("u and v must not depend on t");
  const std::vector<double> apex(static_cast<std::size_t>(geom.n), 0.0);
  const Jet ju = prolong(u, apex, m), jv = prolong(v, apex, m);
  const double gap = max_coefficient_difference(ju, jv);
  if (!(gap <= 1e-9))
    throw PreconditionError("jets of u and v at the apex differ by " + std::to_string(gap) + " at order <= " +
                            std::to_string(m));
  ConeGlue g;
  g.n = geom.n;
  g.cutoff = angular_cutoff(geom.n);
  g.v = v;
  g.expression = v + g.cutoff * (u - v);
  g.f_ = std::make_shared<const Program>(g.expression);
  g.v_ = std::make_shared<const Program>(v);
  return g;
}

// ---------------------------------------------------------------------------

Expression extend_separated(const JetFamily& family) {
  family.validate();
  const auto& pts = family.entries;
  if (pts.empty()) throw PreconditionError("cannot extend an empty family");
  if (pts.size() == 1) return taylor_polynomial(pts[0]);
  Expression f;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < pts.size(); ++l)
      if (l != k) nearest = std::min(nearest, distance(pts[k].base(), pts[l].base()));
    const double r = nearest / 3.0;
    f = f + radial_bump(pts[k].base(), r / 2.0, r) * taylor_polynomial(pts[k]);
  }
  return f;
}

std::optional<std::pair<std::size_t, std::size_t>> separation_violation(const JetFamily& family, double c) {
  const std::vector<double> origin(static_cast<std::size_t>(family.dimension), 0.0);
  const auto& limit = family.limit ? family.limit->base() : origin;
  const auto& pts = family.entries;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double nk = distance(pts[k].base(), limit);
    for (std::size_t l = k + 1; l < pts.size(); ++l) {
      const double nl = distance(pts[l].base(), limit);
      const double d = c * distance(pts[k].base(), pts[l].base());
      if (nk > d || nl > d) return std::make_pair(k, l);
    }
  }
  return std::nullopt;
}

SequenceExtension extend_sequence(const JetFamily& family, const SequenceOptions& options) {
  family.validate();
  if (family.entries.empty()) throw PreconditionError("cannot extend an empty family");
  if (!(options.c > 0.0)) throw PreconditionError("separation constant must be positive");
  const int m = options.m < 0 ? family.order : options.m;
  const std::vector<double> origin(static_cast<std::size_t>(family.dimension), 0.0);
  const auto& limit = family.limit ? family.limit->base() : origin;

  if (auto bad = separation_violation(family, options.c))
    throw PreconditionError("separation hypothesis fails for points " + std::to_string(bad->first) + " and " +
                            std::to_string(bad->second) + " with c = " + std::to_string(options.c));

  SequenceExtension out;
  const double eps = options.epsilon;
  out.decay = check_decay(family, m, options.scales, [eps](double) { return eps; });
  if (!out.decay.holds()) {
    std::size_t s = 0;
    while (out.decay.holds_at(s)) ++s;
    throw PreconditionError("decay hypothesis fails for m=" + std::to_string(m) + ": modulus " +
                            std::to_string(out.decay.modulus_at(s)) + " exceeds " + std::to_string(eps) +
                            " at scale " + std::to_string(options.scales[s]));
  }

  Expression f;
  for (const auto& T : family.entries) {
    const double r = distance(T.base(), limit) / (4.0 * options.c);
    f = f + radial_bump(T.base(), r / 2.0, r) * taylor_polynomial(T);
  }
  out.f = f;
  if (options.certify && m >= 1) {
    const Program p(f);
    out.certificate =
        smoothness_certificate([&p](std::span<const double> x) { return p.evaluate(x); }, limit, m,
                               options.certificate);
  }
  return out;
}

}  // namespace jetcalc
