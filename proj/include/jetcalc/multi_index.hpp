#pragma once

// Multi-indices I = (r_1, ..., r_n) with |I|, I! and I + J, plus the
// graded-lexicographic enumeration used to key every coefficient table.

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace jetcalc {

class MultiIndex {
 public:
  MultiIndex() = default;
  /// All-zero index of dimension n.
  explicit MultiIndex(int n);
  MultiIndex(std::initializer_list<int> exponents);
  explicit MultiIndex(std::vector<int> exponents);

  /// e_i in dimension n (i is 1-based).
  static MultiIndex unit(int n, int i);

  int dimension() const noexcept { return static_cast<int>(r_.size()); }
  int operator[](int i) const { return r_[static_cast<std::size_t>(i)]; }
  std::span<const int> exponents() const noexcept { return r_; }

  /// |I| = r_1 + ... + r_n.
  int norm() const noexcept;
  /// I! = r_1! ... r_n!; throws OverflowError when it does not fit.
  std::uint64_t factorial() const;

  /// Componentwise J <= I.
  bool dominated_by(const MultiIndex& other) const;

  std::string to_string() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> r_;
};

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);
/// Componentwise difference; requires b <= a.
MultiIndex operator-(const MultiIndex& a, const MultiIndex& b);

inline int mi_norm(const MultiIndex& i) { return i.norm(); }
inline std::uint64_t mi_factorial(const MultiIndex& i) { return i.factorial(); }
inline MultiIndex mi_add(const MultiIndex& a, const MultiIndex& b) { return a + b; }

/// All I with |I| <= m in graded-lexicographic order: ascending degree,
/// and within a degree lexicographically descending, so (1,0) precedes
/// (0,1).
std::vector<MultiIndex> mi_enumerate(int n, int m);

/// C(n + m, n): number of multi-indices of dimension n and degree <= m.
/// Throws OverflowError.
std::uint64_t mi_count(int n, int m);

/// Position of I in mi_enumerate(n, |I|) (and so in every longer one).
std::size_t mi_rank(const MultiIndex& i);

/// Checked binomial coefficient.
std::uint64_t binomial(int n, int k);

/// (y - a)^I / I! for a point offset d = y - a.
double monomial_over_factorial(const MultiIndex& i, std::span<const double> d);

/// Precomputed index tables for dense coefficient vectors of dimension n
/// truncated at order m. Shared and immutable; obtain through
/// index_table().
struct IndexTable {
  int n = 0;
  int m = 0;
  std::vector<MultiIndex> indices;  // graded-lex
  std::vector<int> degree;          // |I| per rank
  std::vector<double> factorial;    // I! per rank
  std::vector<int> degree_start;    // first rank of each degree, size m + 2

  // For each rank I: all pairs (J, I - J) with J <= I, J in graded-lex
  // order. Stored flat; entries for I are [pair_begin[I], pair_begin[I+1]).
  std::vector<std::uint32_t> pair_begin;
  std::vector<std::uint32_t> pair_j;
  std::vector<std::uint32_t> pair_rest;

  // Leibniz weights C(I, J) = prod C(I_i, J_i), parallel to pair_j.
  std::vector<double> pair_binom;

  // For each rank I != 0: pivot variable p (first i with I_i > 0) and, for
  // each pair, the weight C(I - e_p, J - e_p) used by recurrences derived
  // from f' = g' h. Pairs with J_p == 0 get weight 0.
  std::vector<int> pivot;
  std::vector<double> pivot_weight;  // parallel to pair_j

  // rank of I + e_i, or -1 if beyond order m. Indexed [rank * n + i].
  std::vector<int> raise;

  std::size_t size() const noexcept { return indices.size(); }
};

std::shared_ptr<const IndexTable> index_table(int n, int m);

}  // namespace jetcalc
