#pragma once

#include <cstdint>
#include <vector>

#include "sslab/errors.hpp"

namespace sslab {

// Von Mangoldt values for an inclusive range: values[n - lo] = Lambda(n).
struct LambdaSegment {
  uint64_t lo = 0;
  uint64_t hi = 0;
  std::vector<double> values;

  double at(uint64_t n) const { return values[n - lo]; }
};

// Exact Lambda via a segmented sieve: log n at the primes found by
// Eratosthenes marking, overwritten with log p at proper prime powers.
LambdaSegment sieve_lambda(uint64_t lo, uint64_t hi,
                           uint64_t hi_budget = 22000000);

struct MomentRow {
  uint64_t N = 0;
  double delta = 0.0;
  uint64_t H = 0;
  int k = 0;
  double value = 0.0;
  double guide = 0.0;
};

// Heuristic magnitude N^{delta (k-1)/2} ((1-delta) log N)^{(k+1)/2} for the
// k-th window moment.
double guide_curve(uint64_t N, double delta, int k);

// Holds Lambda up to a limit so many (N, delta) moment passes can share one
// sieve. Segments are sieved in parallel; each moment pass is sequential.
class PrimeWindowMoments {
 public:
  explicit PrimeWindowMoments(uint64_t limit, int threads = 1,
                              uint64_t limit_budget = 22000000);

  uint64_t limit() const { return limit_; }
  double lambda(uint64_t n) const { return lambda_[n]; }

  // M~_k(N; N^delta) = (1/N) sum_{n=N}^{2N} (psi(n+H) - psi(n) - H)^k with
  // H = floor(N^delta), for every k in ks. With from_one the n-sum runs over
  // [1, N] instead (the centered-moment convention without the 2N shift).
  std::vector<MomentRow> moments(uint64_t N, double delta,
                                 const std::vector<int>& ks,
                                 bool from_one = false) const;

 private:
  uint64_t limit_;
  std::vector<double> lambda_;  // index by n, 0..limit
};

// One-shot convenience wrapper around PrimeWindowMoments.
std::vector<MomentRow> psi_window_moments(uint64_t N, double delta,
                                          const std::vector<int>& ks,
                                          int threads = 1,
                                          bool from_one = false);

}  // namespace sslab
