#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sslab/arith.hpp"

namespace sslab {

// A tuple of k distinct integer offsets, canonicalized so the smallest is 0.
// Canonicalization makes translation invariance structural.
class OffsetTuple {
 public:
  explicit OffsetTuple(std::vector<int64_t> offsets);

  const std::vector<uint64_t>& offsets() const { return offsets_; }
  size_t k() const { return offsets_.size(); }

 private:
  std::vector<uint64_t> offsets_;  // strictly increasing, first element 0
};

// Same, but repeats are allowed (non-decreasing).
class MultiTuple {
 public:
  explicit MultiTuple(std::vector<int64_t> offsets);
  explicit MultiTuple(const OffsetTuple& t);

  const std::vector<uint64_t>& offsets() const { return offsets_; }
  size_t k() const { return offsets_.size(); }

 private:
  std::vector<uint64_t> offsets_;  // non-decreasing, first element 0
};

// Value of a truncated Euler product. The untruncated value lies in
// [value*(1-tail_bound), value*(1+tail_bound)] when value != 0. A value of 0
// from a vanishing factor is exact (tail_bound 0); for derived sums with
// value 0 the tail_bound is the absolute enclosure half-width instead.
struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;
  uint64_t truncation = 0;
};

inline double abs_tail(const SeriesValue& s) {
  return s.value == 0.0 ? s.tail_bound : std::abs(s.value) * s.tail_bound;
}

// One-time factorization of the k-tuple Euler product into a generic part
// G_k = prod_{k < p <= P} (1-1/p)^{-k} (1-k/p) and per-prime corrections.
// Primes p <= k never have k distinct residues available, so they are always
// evaluated directly. Immutable and shareable across threads.
class GenericProductCache {
 public:
  static constexpr int kDefaultKMax = 12;
  static constexpr uint64_t kDefaultTruncation = 1000000;

  explicit GenericProductCache(uint64_t truncation_prime,
                               int k_max = kDefaultKMax);

  // Restores a cache from serialized parts without recomputation.
  static GenericProductCache from_parts(uint64_t truncation_prime, int k_max,
                                        std::vector<double> generic_products,
                                        PrimeTable table);

  GenericProductCache(const GenericProductCache&) = delete;
  GenericProductCache& operator=(const GenericProductCache&) = delete;
  GenericProductCache(GenericProductCache&&) = default;
  GenericProductCache& operator=(GenericProductCache&&) = default;

  uint64_t truncation() const { return truncation_; }
  int k_max() const { return k_max_; }
  const PrimeTable& table() const { return table_; }

  // G_k over k < p <= P. G_0 = G_1 = 1 exactly.
  double generic_product(int k) const;

  // (1-1/p)^{-k} (1-k/p) for a single prime.
  static double generic_factor(uint64_t p, int k);

  // (1-1/p)^{-k} (1-nu/p) for a single prime.
  static double special_factor(uint64_t p, int k, unsigned nu);

  // Relative tail bound exp(c_k * sum_{p > P} p^-2) - 1 with
  // c_k = k(k-1)/2 + k^2 and the prime sum bounded by 1/(P log P).
  double tail_bound(int k) const;

  static double tail_constant(int k) {
    return 0.5 * k * (k - 1) + static_cast<double>(k) * k;
  }

 private:
  GenericProductCache(uint64_t truncation_prime, int k_max,
                      std::vector<double> gk, PrimeTable table);

  uint64_t truncation_;
  int k_max_;
  std::vector<double> generic_products_;  // index k in [0, k_max]
  PrimeTable table_;
};

// Number of distinct residue classes modulo p occupied by the offsets.
unsigned nu_p(std::span<const uint64_t> offsets, uint64_t p);

inline unsigned nu_p(const OffsetTuple& t, uint64_t p) {
  return nu_p(std::span<const uint64_t>(t.offsets()), p);
}
inline unsigned nu_p(const MultiTuple& t, uint64_t p) {
  return nu_p(std::span<const uint64_t>(t.offsets()), p);
}

// Truncated singular series prod_{p <= P} (1-1/p)^{-k} (1-nu_p/p).
// Throws TruncationError if a pairwise difference has a prime factor > P.
SeriesValue singular_series(const OffsetTuple& D,
                            const GenericProductCache& cache);

// Centered singular series: alternating sum of singular_series over subsets.
SeriesValue singular_series_zero(const OffsetTuple& D,
                                 const GenericProductCache& cache);

// Exact finite-modulus singular series prod_{p | q} (1-1/p)^{-k} (1-nu_p/p),
// k counted with multiplicity. Returns 1 for q = 1.
BigRational singular_series_mod(const MultiTuple& D,
                                const SquarefreeModulus& q);

// Exact centered variant: alternating sum over position-subsets of D.
BigRational singular_series_zero_mod(const MultiTuple& D,
                                     const SquarefreeModulus& q);

}  // namespace sslab
