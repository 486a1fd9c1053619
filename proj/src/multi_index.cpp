#include "jetcalc/multi_index.hpp"

#include <map>
#include <numeric>
#include <mutex>

#include "jetcalc/error.hpp"

namespace jetcalc {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in multi-index arithmetic");
  return r;
}

// Number of multi-indices in k variables with exact degree e.
std::uint64_t exact_count(int k, int e) {
  if (k == 0) return e == 0 ? 1 : 0;
  return binomial(e + k - 1, k - 1);
}

}  // namespace

MultiIndex::MultiIndex(int n) {
  if (n < 1) throw PreconditionError("multi-index dimension must be at least 1");
  r_.assign(static_cast<std::size_t>(n), 0);
}

MultiIndex::MultiIndex(std::initializer_list<int> exponents)
    : MultiIndex(std::vector<int>(exponents)) {}

MultiIndex::MultiIndex(std::vector<int> exponents) : r_(std::move(exponents)) {
  if (r_.empty()) throw PreconditionError("multi-index dimension must be at least 1");
  for (int v : r_)
    if (v < 0) throw PreconditionError("multi-index entries must be non-negative");
}

MultiIndex MultiIndex::unit(int n, int i) {
  if (i < 1 || i > n) throw PreconditionError("unit index out of range");
  MultiIndex m(n);
  m.r_[static_cast<std::size_t>(i - 1)] = 1;
  return m;
}

int MultiIndex::norm() const noexcept {
  int s = 0;
  for (int v : r_) s += v;
  return s;
}

std::uint64_t MultiIndex::factorial() const {
  std::uint64_t f = 1;
  for (int v : r_)
    for (int k = 2; k <= v; ++k) f = checked_mul(f, static_cast<std::uint64_t>(k));
  return f;
}

bool MultiIndex::dominated_by(const MultiIndex& other) const {
  if (dimension() != other.dimension()) return false;
  for (std::size_t i = 0; i < r_.size(); ++i)
    if (r_[i] > other.r_[i]) return false;
  return true;
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(r_[i]);
  }
  return s + ")";
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  if (a.dimension() != b.dimension()) throw PreconditionError("multi-index dimensions differ");
  std::vector<int> r(a.exponents().begin(), a.exponents().end());
  for (int i = 0; i < a.dimension(); ++i) {
    if (__builtin_add_overflow(r[i], b[i], &r[i])) throw OverflowError("multi-index entry overflow");
  }
  return MultiIndex(std::move(r));
}

MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
  if (!b.dominated_by(a)) throw PreconditionError("multi-index difference requires J <= I");
  std::vector<int> r(a.exponents().begin(), a.exponents().end());
  for (int i = 0; i < a.dimension(); ++i) r[i] -= b[i];
  return MultiIndex(std::move(r));
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  // r stays an exact integer after each step: r * (n - k + i) / i = C(n-k+i, i).
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    const std::uint64_t g = std::gcd(r, static_cast<std::uint64_t>(i));
    r = checked_mul(r / g, num / (static_cast<std::uint64_t>(i) / g));
  }
  return r;
}

std::uint64_t mi_count(int n, int m) {
  if (n < 1 || m < 0) throw PreconditionError("mi_count requires n >= 1 and m >= 0");
  return binomial(n + m, n);
}

std::vector<MultiIndex> mi_enumerate(int n, int m) {
  if (n < 1 || m < 0) throw PreconditionError("mi_enumerate requires n >= 1 and m >= 0");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(mi_count(n, m)));
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  // Recursive fill: component j takes values from the remaining degree down
  // to 0, which yields lexicographically descending order within a degree.
  auto fill = [&](auto&& self, int j, int remaining) -> void {
    if (j == n - 1) {
      cur[static_cast<std::size_t>(j)] = remaining;
      out.emplace_back(cur);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[static_cast<std::size_t>(j)] = v;
      self(self, j + 1, remaining - v);
    }
  };
  for (int d = 0; d <= m; ++d) fill(fill, 0, d);
  return out;
}

std::size_t mi_rank(const MultiIndex& idx) {
  const int n = idx.dimension();
  const int d = idx.norm();
  std::uint64_t rank = d == 0 ? 0 : mi_count(n, d - 1);
  int remaining = d;
  for (int j = 0; j < n - 1; ++j) {
    // Indices that agree on components < j and have a larger j-th entry
    // come first.
    for (int v = remaining; v > idx[j]; --v) rank += exact_count(n - j - 1, remaining - v);
    remaining -= idx[j];
  }
  return static_cast<std::size_t>(rank);
}

double monomial_over_factorial(const MultiIndex& i, std::span<const double> d) {
  double v = 1.0;
  for (int k = 0; k < i.dimension(); ++k) {
    for (int p = 1; p <= i[k]; ++p) v *= d[static_cast<std::size_t>(k)] / p;
  }
  return v;
}

namespace {

std::shared_ptr<const IndexTable> build_table(int n, int m) {
  auto t = std::make_shared<IndexTable>();
  t->n = n;
  t->m = m;
  t->indices = mi_enumerate(n, m);
  const std::size_t size = t->indices.size();
  t->degree.resize(size);
  t->factorial.resize(size);
  t->degree_start.assign(static_cast<std::size_t>(m + 2), static_cast<int>(size));
  for (std::size_t r = 0; r < size; ++r) {
    const auto& I = t->indices[r];
    t->degree[r] = I.norm();
    t->factorial[r] = static_cast<double>(I.factorial());
    if (t->degree_start[static_cast<std::size_t>(t->degree[r])] == static_cast<int>(size))
      t->degree_start[static_cast<std::size_t>(t->degree[r])] = static_cast<int>(r);
  }

  t->pair_begin.reserve(size + 1);
  t->pivot.assign(size, -1);
  for (std::size_t r = 0; r < size; ++r) {
    const auto& I = t->indices[r];
    t->pair_begin.push_back(static_cast<std::uint32_t>(t->pair_j.size()));
    int pivot = -1;
    for (int i = 0; i < n; ++i)
      if (I[i] > 0) {
        pivot = i;
        break;
      }
    t->pivot[r] = pivot;
    // J <= I in graded-lex order: walk the prefix of the enumeration up to
    // degree |I|.
    for (std::size_t jr = 0; jr <= r; ++jr) {
      const auto& J = t->indices[jr];
      if (!J.dominated_by(I)) continue;
      t->pair_j.push_back(static_cast<std::uint32_t>(jr));
      t->pair_rest.push_back(static_cast<std::uint32_t>(mi_rank(I - J)));
      double binom = 1.0, shifted = 1.0;
      for (int i = 0; i < n; ++i) {
        const auto c = static_cast<double>(binomial(I[i], J[i]));
        binom *= c;
        shifted *= i == pivot ? static_cast<double>(binomial(I[i] - 1, J[i] - 1)) : c;
      }
      t->pair_binom.push_back(binom);
      t->pivot_weight.push_back(pivot < 0 || J[pivot] == 0 ? 0.0 : shifted);
    }
  }
  t->pair_begin.push_back(static_cast<std::uint32_t>(t->pair_j.size()));

  t->raise.assign(size * static_cast<std::size_t>(n), -1);
  for (std::size_t r = 0; r < size; ++r) {
    if (t->degree[r] >= m) continue;
    for (int i = 0; i < n; ++i)
      t->raise[r * n + i] = static_cast<int>(mi_rank(t->indices[r] + MultiIndex::unit(n, i + 1)));
  }
  return t;
}

}  // namespace

std::shared_ptr<const IndexTable> index_table(int n, int m) {
  if (n < 1 || m < 0) throw PreconditionError("index_table requires n >= 1 and m >= 0");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, m}];
  if (!slot) slot = build_table(n, m);
  return slot;
}

}  // namespace jetcalc
