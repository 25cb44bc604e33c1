#include "sslab/prime_moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sslab/arith.hpp"
#include "sslab/parallel.hpp"

namespace sslab {

namespace {

// Primes up to limit with a plain bool sieve (no spf array, small footprint).
std::vector<uint32_t> base_primes(uint64_t limit) {
  std::vector<bool> composite(limit + 1, false);
  std::vector<uint32_t> primes;
  for (uint64_t p = 2; p <= limit; ++p) {
    if (composite[p]) continue;
    primes.push_back(static_cast<uint32_t>(p));
    for (uint64_t m = p * p; m <= limit; m += p) composite[m] = true;
  }
  return primes;
}

void fill_lambda(uint64_t lo, uint64_t hi,
                 const std::vector<uint32_t>& primes, double* out) {
  const uint64_t len = hi - lo + 1;
  std::vector<bool> composite(len, false);
  for (uint32_t p : primes) {
    uint64_t p2 = static_cast<uint64_t>(p) * p;
    if (p2 > hi) break;
    uint64_t start = std::max(p2, ((lo + p - 1) / p) * p);
    for (uint64_t m = start; m <= hi; m += p) composite[m - lo] = true;
  }
  for (uint64_t n = lo; n <= hi; ++n)
    out[n - lo] = (n >= 2 && !composite[n - lo])
                      ? std::log(static_cast<double>(n))
                      : 0.0;
  // proper prime powers p^j, j >= 2, carry log p
  for (uint32_t p : primes) {
    uint64_t pw = static_cast<uint64_t>(p) * p;
    if (pw > hi) break;
    for (; pw <= hi; pw *= p) {
      if (pw >= lo) out[pw - lo] = std::log(static_cast<double>(p));
      if (pw > hi / p) break;
    }
  }
}

}  // namespace

LambdaSegment sieve_lambda(uint64_t lo, uint64_t hi, uint64_t hi_budget) {
  if (lo > hi) throw std::domain_error("sieve_lambda: lo > hi");
  if (hi - lo + 1 > 100000000ull)
    throw BudgetError("sieve_lambda: segment longer than 1e8");
  if (hi > hi_budget)
    throw BudgetError("sieve_lambda: hi " + std::to_string(hi) +
                      " exceeds budget " + std::to_string(hi_budget));

  LambdaSegment seg;
  seg.lo = lo;
  seg.hi = hi;
  seg.values.assign(hi - lo + 1, 0.0);
  auto primes = base_primes(static_cast<uint64_t>(std::sqrt(double(hi))) + 1);
  fill_lambda(lo, hi, primes, seg.values.data());
  return seg;
}

double guide_curve(uint64_t N, double delta, int k) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("guide_curve: delta must be in (0,1)");
  double Nd = static_cast<double>(N);
  return std::pow(Nd, delta * (k - 1) / 2.0) *
         std::pow((1.0 - delta) * std::log(Nd), (k + 1) / 2.0);
}

PrimeWindowMoments::PrimeWindowMoments(uint64_t limit, int threads,
                                       uint64_t limit_budget)
    : limit_(limit) {
  if (limit < 4) throw std::domain_error("PrimeWindowMoments: limit too small");
  if (limit > limit_budget)
    throw BudgetError("PrimeWindowMoments: limit " + std::to_string(limit) +
                      " exceeds budget " + std::to_string(limit_budget));
  lambda_.assign(limit + 1, 0.0);
  auto primes = base_primes(static_cast<uint64_t>(std::sqrt(double(limit))) + 1);
  const uint64_t seg_len = 1 << 20;
  const uint64_t n_segments = (limit + seg_len) / seg_len;
  parallel_blocks(n_segments, threads, [&](uint64_t s) {
    uint64_t lo = s * seg_len;
    uint64_t hi = std::min(limit, lo + seg_len - 1);
    if (lo > hi) return;
    fill_lambda(std::max<uint64_t>(lo, 1), hi, primes,
                lambda_.data() + std::max<uint64_t>(lo, 1));
  });
}

std::vector<MomentRow> PrimeWindowMoments::moments(uint64_t N, double delta,
                                                   const std::vector<int>& ks,
                                                   bool from_one) const {
  if (N < 2) throw std::domain_error("moments: N must be >= 2");
  const uint64_t H =
      static_cast<uint64_t>(std::floor(std::pow(static_cast<double>(N), delta)));
  const uint64_t n_lo = from_one ? 1 : N;
  const uint64_t n_hi = from_one ? N : 2 * N;
  if (n_hi + H > limit_)
    throw BudgetError("moments: requires Lambda up to " +
                      std::to_string(n_hi + H) + " but sieve stops at " +
                      std::to_string(limit_));

  // S(n) = psi(n+H) - psi(n), slid with compensated updates.
  CompensatedAccumulator window;
  for (uint64_t m = n_lo + 1; m <= n_lo + H; ++m) window.add(lambda_[m]);

  std::vector<CompensatedAccumulator> acc(ks.size());
  for (uint64_t n = n_lo;; ++n) {
    double d = window.value() - static_cast<double>(H);
    for (size_t i = 0; i < ks.size(); ++i) {
      double t = d;
      for (int j = 1; j < ks[i]; ++j) t *= d;
      acc[i].add(t);
    }
    if (n == n_hi) break;
    window.add(lambda_[n + 1 + H]);
    window.add(-lambda_[n + 1]);
  }

  std::vector<MomentRow> rows;
  rows.reserve(ks.size());
  for (size_t i = 0; i < ks.size(); ++i) {
    MomentRow row;
    row.N = N;
    row.delta = delta;
    row.H = H;
    row.k = ks[i];
    row.value = acc[i].value() / static_cast<double>(N);
    row.guide = guide_curve(N, delta, ks[i]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<MomentRow> psi_window_moments(uint64_t N, double delta,
                                          const std::vector<int>& ks,
                                          int threads, bool from_one) {
  const uint64_t H =
      static_cast<uint64_t>(std::floor(std::pow(static_cast<double>(N), delta)));
  PrimeWindowMoments pw((from_one ? N : 2 * N) + H, threads);
  return pw.moments(N, delta, ks, from_one);
}

}  // namespace sslab
