#include "jetcalc/peetre.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "jetcalc/error.hpp"
#include "jetcalc/parallel.hpp"
#include "jetcalc/smooth.hpp"

namespace jetcalc {

void ProbeConfig::validate() const {
  if (trials < 1) throw PreconditionError("probe trials must be >= 1");
  if (M < 2) throw PreconditionError("working order M must be >= 2");
  if (!(rel_tol > 0.0)) throw PreconditionError("probe tolerance must be > 0");
  if (amplitudes.empty()) throw PreconditionError("amplitude schedule must not be empty");
  for (double a : amplitudes)
    if (!(a > 0.0)) throw PreconditionError("amplitudes must be > 0");
  if (confirmations < 1) throw PreconditionError("confirmations must be >= 1");
  if (!(bump_radius > 0.0)) throw PreconditionError("bump radius must be > 0");
}

const char* to_string(ProbeStatus s) {
  switch (s) {
    case ProbeStatus::Pass: return "pass";
    case ProbeStatus::Fail: return "fail";
    case ProbeStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

constexpr std::uint64_t kLocalityTag = 1;
constexpr std::uint64_t kDeterminacyTag = 2;
constexpr std::uint64_t kLinearityTag = 3;

std::uint64_t point_key(std::span<const double> x) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (double v : x) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

Box domain_for(const ProbeConfig& cfg, int n) {
  if (cfg.domain) {
    if (cfg.domain->dimension() != n) throw PreconditionError("probe domain has the wrong dimension");
    return *cfg.domain;
  }
  return Box::cube(n);
}

struct Comparison {
  double difference = 0.0;
  bool exceeds = false;
};

// Componentwise: each target gets its own relative tolerance.
Comparison compare(const std::vector<double>& ref, const std::vector<double>& val, const ProbeConfig& cfg) {
  if (ref.size() != val.size()) throw PreconditionError("operator returned a varying number of components");
  Comparison c;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = std::abs(val[i] - ref[i]);
    c.difference = std::max(c.difference, d);
    if (!(d <= cfg.tolerance(ref[i]))) c.exceeds = true;
  }
  return c;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::abs(c));
  return m;
}

// Numerical failures of a trial make it an invalid witness; misuse
// (PreconditionError) still propagates.
template <class F>
bool guarded(TrialRecord& rec, F&& f) {
  try {
    f();
    return true;
  } catch (const DomainError& e) {
    rec.valid = false;
    rec.perturbation = e.what();
  } catch (const OverflowError& e) {
    rec.valid = false;
    rec.perturbation = e.what();
  }
  return false;
}

Section perturbed(const Section& s, double amplitude, const Expression& cutoff, const std::vector<Expression>& q) {
  std::vector<Expression> comps;
  comps.reserve(static_cast<std::size_t>(s.size()));
  for (int a = 0; a < s.size(); ++a)
    comps.push_back(s.component(a) + amplitude * (cutoff * q[static_cast<std::size_t>(a)]));
  return Section(s.dimension(), std::move(comps), s.domain());
}

// Fills rec from the per-amplitude comparisons.
void judge(TrialRecord& rec, const std::vector<Comparison>& cmp, double reference, const ProbeConfig& cfg) {
  int exceeded = 0;
  for (const auto& c : cmp) {
    rec.differences.push_back(c.difference);
    if (c.exceeds) ++exceeded;
  }
  rec.tolerance = cfg.tolerance(reference);
  const int needed = std::min<int>(cfg.confirmations, static_cast<int>(cfg.amplitudes.size()));
  rec.failed = exceeded >= needed;
}

ProbeVerdict summarize(std::vector<TrialRecord> trials, const ProbeConfig& cfg) {
  ProbeVerdict v;
  for (const auto& t : trials) {
    if (!t.valid) continue;
    ++v.valid_trials;
    if (t.failed && !v.witness) v.witness = t.trial;
  }
  if (v.witness)
    v.status = ProbeStatus::Fail;
  else if (v.valid_trials < static_cast<std::size_t>(cfg.trials))
    v.status = ProbeStatus::Inconclusive;
  else
    v.status = ProbeStatus::Pass;
  v.trials = std::move(trials);
  return v;
}

// Coefficients of one random polynomial for every |I| <= hi, graded-lex.
std::vector<double> draw_coefficients(int n, int hi, Rng& rng) {
  std::vector<double> c(mi_count(n, hi));
  for (auto& v : c) v = rng.uniform(-1.0, 1.0);
  return c;
}

Expression polynomial_window(const std::vector<MultiIndex>& indices, const std::vector<double>& coeffs,
                             std::span<const double> c, int lo, int hi) {
  Expression sum;
  for (std::size_t j = 0; j < indices.size() && j < coeffs.size(); ++j) {
    const int d = indices[j].norm();
    if (d < lo || d > hi) continue;
    sum = sum + coeffs[j] * centered_monomial(indices[j], c);
  }
  return sum;
}

void require_inside(const Box& box, std::span<const double> x) {
  if (!box.contains(x)) throw PreconditionError("probe point lies outside the domain");
}

// One determinacy trial: for every level k in [lo, hi], compare h(s)(x) with
// h(s + a B q_k)(x) where q_k keeps the degrees k+1..k+2 of a shared table.
struct LevelTrial {
  std::vector<TrialRecord> levels;  // indexed k - lo
};

LevelTrial determinacy_trial(const OperatorHandle& h, std::span<const double> x, int lo, int hi,
                             const ProbeConfig& cfg, std::size_t trial) {
  const int n = static_cast<int>(x.size());
  const int r = h.metadata().components;
  const Box box = domain_for(cfg, n);
  Rng rng(cfg.seed, {kDeterminacyTag, point_key(x), static_cast<std::uint64_t>(trial)});
  const Section s = random_probe_section(n, r, cfg.M, x, rng, box);
  const auto indices = mi_enumerate(n, hi + 2);
  std::vector<std::vector<double>> table;
  for (int a = 0; a < r; ++a) table.push_back(draw_coefficients(n, hi + 2, rng));
  const Expression bump = radial_bump(x, 0.5 * cfg.bump_radius, cfg.bump_radius);

  LevelTrial out;
  out.levels.resize(static_cast<std::size_t>(hi - lo + 1));
  for (auto& rec : out.levels) rec.trial = trial;

  std::vector<double> ref;
  TrialRecord base;
  if (!guarded(base, [&] { ref = h(s, x); })) {
    for (auto& rec : out.levels) {
      rec.valid = false;
      rec.perturbation = base.perturbation;
    }
    return out;
  }
  for (int k = lo; k <= hi; ++k) {
    TrialRecord& rec = out.levels[static_cast<std::size_t>(k - lo)];
    std::vector<Expression> q;
    for (int a = 0; a < r; ++a)
      q.push_back(polynomial_window(indices, table[static_cast<std::size_t>(a)], x, k + 1, k + 2));
    rec.perturbation = q.front().to_string();
    std::vector<Comparison> cmp;
    const bool ok = guarded(rec, [&] {
      for (double amp : cfg.amplitudes) cmp.push_back(compare(ref, h(perturbed(s, amp, bump, q), x), cfg));
    });
    if (ok) judge(rec, cmp, max_abs(ref), cfg);
  }
  return out;
}

}  // namespace

Expression random_polynomial(int n, std::span<const double> c, int lo, int hi, Rng& rng) {
  if (lo < 0 || hi < lo) throw PreconditionError("random_polynomial needs 0 <= lo <= hi");
  if (static_cast<int>(c.size()) != n) throw PreconditionError("polynomial centre has the wrong dimension");
  const auto indices = mi_enumerate(n, hi);
  std::vector<double> coeffs(indices.size(), 0.0);
  for (std::size_t j = 0; j < indices.size(); ++j)
    if (indices[j].norm() >= lo) coeffs[j] = rng.uniform(-1.0, 1.0);
  return polynomial_window(indices, coeffs, c, lo, hi);
}

Section random_probe_section(int n, int r, int M, std::span<const double> c, Rng& rng, std::optional<Box> domain) {
  if (n < 1 || r < 1 || M < 0) throw PreconditionError("probe section needs n >= 1, r >= 1, M >= 0");
  std::vector<Expression> comps;
  for (int a = 0; a < r; ++a) {
    Expression p = random_polynomial(n, c, 0, M, rng);
    const double amp = rng.uniform(-1.0, 1.0);
    Expression phase = Expression::constant(rng.uniform(-1.0, 1.0));
    for (int i = 1; i <= n; ++i) phase = phase + rng.uniform(-1.0, 1.0) * Expression::variable(i);
    comps.push_back(p + amp * sin(phase));
  }
  return Section(n, std::move(comps), std::move(domain));
}

ProbeVerdict check_locality(const OperatorHandle& h, const Section& s, std::span<const double> x, double r,
                            const ProbeConfig& cfg) {
  cfg.validate();
  if (!(r > 0.0)) throw PreconditionError("locality radius must be > 0");
  const int n = s.dimension();
  if (static_cast<int>(x.size()) != n) throw PreconditionError("point has the wrong dimension");
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (x[ui] - r < s.domain().lo[ui] || x[ui] + r > s.domain().hi[ui])
      throw PreconditionError("ball B(x, r) is not inside the section domain");
  }
  const Expression cutoff = annular_cutoff(x, r, 1.1 * r);
  std::vector<TrialRecord> trials(static_cast<std::size_t>(cfg.trials));
  parallel_for(trials.size(), cfg.jobs, [&](std::size_t t) {
    TrialRecord& rec = trials[t];
    rec.trial = t;
    Rng rng(cfg.seed, {kLocalityTag, point_key(x), static_cast<std::uint64_t>(t)});
    std::vector<Expression> q;
    for (int a = 0; a < s.size(); ++a) q.push_back(random_polynomial(n, x, 0, 2, rng));
    std::vector<double> ref;
    std::vector<Comparison> cmp;
    const bool ok = guarded(rec, [&] {
      ref = h(s, x);
      for (double amp : cfg.amplitudes) cmp.push_back(compare(ref, h(perturbed(s, amp, cutoff, q), x), cfg));
    });
    if (!ok) return;
    rec.perturbation = q.front().to_string();
    judge(rec, cmp, max_abs(ref), cfg);
  });
  return summarize(std::move(trials), cfg);
}

ProbeVerdict check_jet_determinacy(const OperatorHandle& h, std::span<const double> x, int k, const ProbeConfig& cfg) {
  cfg.validate();
  if (k < 0 || k > cfg.M - 2) throw PreconditionError("determinacy order k must satisfy 0 <= k <= M - 2");
  require_inside(domain_for(cfg, static_cast<int>(x.size())), x);
  std::vector<TrialRecord> trials(static_cast<std::size_t>(cfg.trials));
  parallel_for(trials.size(), cfg.jobs,
               [&](std::size_t t) { trials[t] = determinacy_trial(h, x, k, k, cfg, t).levels.front(); });
  return summarize(std::move(trials), cfg);
}

SequenceVerdict check_sequence_determinacy(const OperatorHandle& h, const Section& s, const Section& s_prime,
                                           const std::vector<std::vector<double>>& xs,
                                           const std::vector<int>& k_of_index, const ProbeConfig& cfg) {
  cfg.validate();
  if (xs.empty()) throw PreconditionError("point sequence must not be empty");
  if (k_of_index.size() != xs.size()) throw PreconditionError("need one order per sequence point");
  if (s.dimension() != s_prime.dimension() || s.size() != s_prime.size())
    throw PreconditionError("sections must have equal dimension and component count");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const int k = k_of_index[i];
    if (k < 0) throw PreconditionError("negative order at sequence index " + std::to_string(i));
    const auto a = s.prolong(xs[i], k);
    const auto b = s_prime.prolong(xs[i], k);
    for (std::size_t c = 0; c < a.size(); ++c)
      if (!(max_coefficient_difference(a[c], b[c]) <= 1e-9))
        throw PreconditionError("jets of s and s' differ at sequence index " + std::to_string(i));
  }
  SequenceVerdict v;
  std::vector<bool> within(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto a = h(s, xs[i]);
    const auto b = h(s_prime, xs[i]);
    const Comparison c = compare(a, b, cfg);
    v.differences.push_back(c.difference);
    v.tolerances.push_back(cfg.tolerance(max_abs(a)));
    within[i] = !c.exceeds;
  }
  for (std::size_t i = xs.size(); i-- > 0;) {
    if (!within[i]) break;
    v.tail = i;
  }
  return v;
}

OrderVerdict estimate_order(const OperatorHandle& h, std::span<const double> x, int k_max, const ProbeConfig& cfg) {
  cfg.validate();
  if (k_max < 0 || k_max > cfg.M - 2) throw PreconditionError("k_max must satisfy 0 <= k_max <= M - 2");
  require_inside(domain_for(cfg, static_cast<int>(x.size())), x);

  std::vector<LevelTrial> runs(static_cast<std::size_t>(cfg.trials));
  parallel_for(runs.size(), cfg.jobs, [&](std::size_t t) { runs[t] = determinacy_trial(h, x, 0, k_max, cfg, t); });

  OrderVerdict v;
  v.point.assign(x.begin(), x.end());
  v.k_max = k_max;
  v.seed = cfg.seed;
  for (int k = 0; k <= k_max; ++k) {
    std::vector<TrialRecord> level;
    for (const auto& run : runs) level.push_back(run.levels[static_cast<std::size_t>(k)]);
    const ProbeVerdict pv = summarize(std::move(level), cfg);
    OrderLevel L;
    L.k = k;
    L.raw = L.status = pv.status;
    if (pv.witness) {
      L.witness_trial = pv.witness;
      L.witness = pv.trials[*pv.witness].perturbation;
    }
    v.levels.push_back(std::move(L));
  }
  // A k-jet failure refutes every lower order too.
  std::optional<int> failing_above;
  for (int k = k_max; k >= 0; --k) {
    OrderLevel& L = v.levels[static_cast<std::size_t>(k)];
    if (L.raw == ProbeStatus::Fail) {
      failing_above = k;
    } else if (failing_above) {
      L.status = ProbeStatus::Fail;
      L.demoted_by = failing_above;
    }
  }
  int k0 = -1;
  for (int k = 0; k <= k_max; ++k)
    if (v.levels[static_cast<std::size_t>(k)].status != ProbeStatus::Fail) {
      k0 = k;
      break;
    }
  if (k0 < 0)
    v.exceeds = true;
  else if (v.levels[static_cast<std::size_t>(k0)].status == ProbeStatus::Inconclusive)
    v.inconclusive = true;
  else
    v.order = k0;
  return v;
}

bool RegularityReport::passed() const {
  return std::all_of(components.begin(), components.end(), [](const CertificateReport& r) { return r.passed; });
}

RegularityReport check_regularity(const OperatorHandle& h, const Section& s_t, std::span<const double> x, double t0,
                                  const ProbeConfig& cfg, const CertificateOptions& certificate) {
  cfg.validate();
  const std::size_t targets = h(s_t, x, t0).size();
  RegularityReport report;
  for (std::size_t c = 0; c < targets; ++c) {
    ScalarField g = [&, c](std::span<const double> t) { return h(s_t, x, t[0]).at(c); };
    const double at[1] = {t0};
    report.components.push_back(smoothness_certificate(g, std::span<const double>(at, 1), 2, certificate));
  }
  return report;
}

Reconstruction::Reconstruction(OperatorHandle h, std::vector<double> x, int k) : h_(std::move(h)), x_(std::move(x)), k_(k) {
  if (k < 0) throw PreconditionError("reconstruction order must be >= 0");
  if (x_.empty()) throw PreconditionError("reconstruction point must have dimension >= 1");
}

std::vector<double> Reconstruction::operator()(const Jet& T) const { return (*this)(std::vector<Jet>{T}); }

std::vector<double> Reconstruction::operator()(const std::vector<Jet>& jets) const {
  std::vector<Jet> cut;
  for (const auto& J : jets) {
    if (J.base() != x_) throw PreconditionError("jet is not based at the reconstruction point");
    if (J.order() < k_) throw PreconditionError("jet order is below the reconstruction order");
    cut.push_back(J.order() == k_ ? J : truncate(J, k_));
  }
  return h_(taylor_polynomial_section(cut), x_);
}

Reconstruction reconstruct(const OperatorHandle& h, std::span<const double> x, int k) {
  return Reconstruction(h, std::vector<double>(x.begin(), x.end()), k);
}

LinearReconstruction reconstruct_linear(const OperatorHandle& h, const std::vector<std::vector<double>>& grid, int k,
                                        const ProbeConfig& cfg) {
  cfg.validate();
  if (k < 0) throw PreconditionError("reconstruction order must be >= 0");
  if (grid.empty()) throw PreconditionError("grid must not be empty");
  const int n = static_cast<int>(grid.front().size());
  const int r = h.metadata().components;
  for (const auto& x : grid)
    if (static_cast<int>(x.size()) != n) throw PreconditionError("grid points must share their dimension");

  LinearReconstruction out;
  out.k = k;
  out.indices = mi_enumerate(n, k);
  out.seed = cfg.seed;
  const std::size_t stride = out.indices.size();

  std::vector<LinearTableEntry> table(grid.size());
  // Trial 0 is the canonical alpha = beta = 1, s1 = s2 = 1.
  const std::size_t per_point = static_cast<std::size_t>(cfg.trials) + 1;
  std::vector<LinearityWitness> checks(grid.size() * per_point);

  parallel_for(grid.size(), cfg.jobs, [&](std::size_t g) {
    const auto& x = grid[g];
    LinearTableEntry& entry = table[g];
    entry.point = x;
    for (int a = 0; a < r; ++a) {
      for (std::size_t j = 0; j < stride; ++j) {
        std::vector<Expression> comps(static_cast<std::size_t>(r));
        comps[static_cast<std::size_t>(a)] = centered_monomial(out.indices[j], x) / out.indices[j].factorial();
        const auto v = h(Section(n, std::move(comps), Box::around(x)), x);
        if (entry.coefficients.empty()) entry.coefficients.assign(v.size(), std::vector<double>(stride * static_cast<std::size_t>(r)));
        for (std::size_t c = 0; c < v.size(); ++c) entry.coefficients[c][static_cast<std::size_t>(a) * stride + j] = v[c];
      }
    }
    for (std::size_t t = 0; t < per_point; ++t) {
      LinearityWitness& w = checks[g * per_point + t];
      w.grid_index = g;
      Section s1, s2;
      if (t == 0) {
        s1 = s2 = Section(n, std::vector<Expression>(static_cast<std::size_t>(r), Expression::constant(1.0)),
                          Box::around(x));
      } else {
        Rng rng(cfg.seed, {kLinearityTag, point_key(x), static_cast<std::uint64_t>(t)});
        w.alpha = rng.uniform(-1.0, 1.0);
        w.beta = rng.uniform(-1.0, 1.0);
        s1 = random_probe_section(n, r, cfg.M, x, rng, domain_for(cfg, n));
        s2 = random_probe_section(n, r, cfg.M, x, rng, domain_for(cfg, n));
      }
      std::vector<Expression> mix;
      for (int a = 0; a < r; ++a) mix.push_back(w.alpha * s1.component(a) + w.beta * s2.component(a));
      const Section combined(n, std::move(mix), s1.domain());
      w.s1 = s1.component(0).to_string();
      w.s2 = s2.component(0).to_string();
      w.combined = h(combined, x);
      const auto h1 = h(s1, x);
      const auto h2 = h(s2, x);
      w.separate.resize(w.combined.size());
      for (std::size_t c = 0; c < w.combined.size(); ++c) {
        w.separate[c] = w.alpha * h1.at(c) + w.beta * h2.at(c);
        w.residual = std::max(w.residual, std::abs(w.combined[c] - w.separate[c]));
      }
      w.tolerance = cfg.tolerance(max_abs(w.combined));
    }
  });

  out.table = std::move(table);
  for (const auto& w : checks) {
    out.max_residual = std::max(out.max_residual, w.residual);
    if (!(w.residual <= w.tolerance) && !out.witness) {
      out.linear = false;
      out.witness = w;
    }
  }
  return out;
}

double apply_linear_table(const LinearTableEntry& entry, int target, const std::vector<Jet>& jets) {
  const auto& row = entry.coefficients.at(static_cast<std::size_t>(target));
  if (jets.empty()) throw PreconditionError("need one jet per component");
  const std::size_t stride = row.size() / jets.size();
  if (stride * jets.size() != row.size()) throw PreconditionError("jet count does not match the table");
  double sum = 0.0;
  for (std::size_t a = 0; a < jets.size(); ++a) {
    if (jets[a].coeffs().size() < stride) throw PreconditionError("jet order is below the table order");
    for (std::size_t j = 0; j < stride; ++j) sum += row[a * stride + j] * jets[a].at_rank(j);
  }
  return sum;
}

}  // namespace jetcalc
