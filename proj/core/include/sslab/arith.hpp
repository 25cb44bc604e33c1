#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sslab/errors.hpp"
#include "sslab/parallel.hpp"
#include "sslab/rational.hpp"

namespace sslab {

// Flat smallest-prime-factor sieve. spf(n) is the least prime dividing n, so
// factorization is a chain of O(log n) lookups. Immutable after construction
// and safe to share across threads.
class PrimeTable {
 public:
  // Hard cap: 4 bytes per entry, so this is ~4 GiB of sieve.
  static constexpr uint64_t kMaxLimit = uint64_t{1} << 30;

  explicit PrimeTable(uint64_t limit);

  uint64_t limit() const { return limit_; }

  uint32_t spf(uint64_t n) const {
    assert(2 <= n && n <= limit_);
    return spf_[n];
  }

  bool is_prime(uint64_t n) const { return n >= 2 && spf(n) == n; }

  // All primes <= limit, increasing.
  const std::vector<uint32_t>& primes() const { return primes_; }

  // Distinct (prime, exponent) pairs with primes strictly increasing.
  // factorize(1) is the empty product.
  std::vector<std::pair<uint64_t, int>> factorize(uint64_t n) const;

  struct MultiplicativeValues {
    int mobius;    // in {-1, 0, 1}
    uint64_t phi;  // Euler totient
  };
  MultiplicativeValues multiplicative_values(uint64_t n) const;

 private:
  uint64_t limit_;
  std::vector<uint32_t> spf_;
  std::vector<uint32_t> primes_;
};

// A squarefree modulus held as its prime support. phi_over_q is exact;
// value is present only when the product fits a machine word.
struct SquarefreeModulus {
  std::vector<uint64_t> primes;  // sorted, distinct
  std::optional<uint64_t> value;
  BigRational phi_over_q;

  BigInt modulus_big() const;
  BigInt phi_big() const;
  BigRational q_over_phi() const { return BigRational(1) / phi_over_q; }
};

SquarefreeModulus squarefree_modulus_from_primes(std::vector<uint64_t> primes);

// Product of all primes <= y.
SquarefreeModulus primorial_modulus(uint64_t y, const PrimeTable& table);

// Neumaier-compensated accumulator. Adding values in a fixed order is
// deterministic, and merging two accumulators is itself two compensated adds,
// so chunked reductions stay bit-reproducible.
struct CompensatedAccumulator {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      compensation += (sum - t) + x;
    else
      compensation += (x - t) + sum;
    sum = t;
  }

  void merge(const CompensatedAccumulator& other) {
    add(other.sum);
    add(other.compensation);
  }

  double value() const { return sum + compensation; }
};

// Fixed chunk size for deterministic parallel reductions.
inline constexpr uint64_t kSumChunk = 4096;

// Compensated sum of f(0), ..., f(n-1). Chunks of kSumChunk terms are summed
// independently (on any thread) and merged left to right, so the result is
// bit-identical for every thread count.
template <class F>
double deterministic_sum(uint64_t n, int threads, F&& f) {
  if (n == 0) return 0.0;
  uint64_t n_chunks = (n + kSumChunk - 1) / kSumChunk;
  std::vector<CompensatedAccumulator> partial(n_chunks);
  parallel_blocks(n_chunks, threads, [&](uint64_t c) {
    uint64_t lo = c * kSumChunk;
    uint64_t hi = std::min(n, lo + kSumChunk);
    CompensatedAccumulator acc;
    for (uint64_t i = lo; i < hi; ++i) acc.add(f(i));
    partial[c] = acc;
  });
  CompensatedAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total.value();
}

// Gaussian moment constants: 1*3*...*(k-1) for even k, 0 for odd k.
uint64_t gaussian_moment(int k);

}  // namespace sslab
