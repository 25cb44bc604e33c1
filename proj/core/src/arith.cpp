#include "sslab/arith.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sslab {

PrimeTable::PrimeTable(uint64_t limit) : limit_(limit) {
  if (limit < 2)
    throw SizingError("prime table limit must be at least 2, got " +
                      std::to_string(limit));
  if (limit > kMaxLimit)
    throw SizingError("prime table limit " + std::to_string(limit) +
                      " exceeds the memory budget (" +
                      std::to_string(kMaxLimit) + ")");

  spf_.assign(limit + 1, 0);
  // Linear sieve: every n is struck exactly once, by spf(n) * (prior prime).
  for (uint64_t n = 2; n <= limit; ++n) {
    if (spf_[n] == 0) {
      spf_[n] = static_cast<uint32_t>(n);
      primes_.push_back(static_cast<uint32_t>(n));
    }
    for (uint32_t p : primes_) {
      if (p > spf_[n] || n * p > limit) break;
      spf_[n * p] = p;
    }
  }
}

std::vector<std::pair<uint64_t, int>> PrimeTable::factorize(uint64_t n) const {
  if (n == 0 || n > limit_)
    throw std::domain_error("factorize: n = " + std::to_string(n) +
                            " outside [1, " + std::to_string(limit_) + "]");
  std::vector<std::pair<uint64_t, int>> factors;
  while (n > 1) {
    uint64_t p = spf_[n];
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    factors.emplace_back(p, e);
  }
  return factors;
}

PrimeTable::MultiplicativeValues PrimeTable::multiplicative_values(
    uint64_t n) const {
  if (n == 0 || n > limit_)
    throw std::domain_error("multiplicative_values: n = " + std::to_string(n) +
                            " outside [1, " + std::to_string(limit_) + "]");
  int mobius = 1;
  uint64_t phi = 1;
  while (n > 1) {
    uint64_t p = spf_[n];
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    phi *= (p - 1);
    for (int i = 1; i < e; ++i) phi *= p;
    mobius = (e > 1) ? 0 : -mobius;
  }
  return {mobius, phi};
}

BigInt SquarefreeModulus::modulus_big() const {
  BigInt q = 1;
  for (uint64_t p : primes) q *= p;
  return q;
}

BigInt SquarefreeModulus::phi_big() const {
  BigInt phi = 1;
  for (uint64_t p : primes) phi *= (p - 1);
  return phi;
}

SquarefreeModulus squarefree_modulus_from_primes(std::vector<uint64_t> primes) {
  std::sort(primes.begin(), primes.end());
  for (size_t i = 0; i + 1 < primes.size(); ++i)
    if (primes[i] == primes[i + 1])
      throw std::domain_error("squarefree modulus: repeated prime " +
                              std::to_string(primes[i]));
  SquarefreeModulus q;
  q.primes = std::move(primes);
  q.phi_over_q = 1;
  BigInt product = 1;
  for (uint64_t p : q.primes) {
    q.phi_over_q *= BigRational(BigInt(p) - 1, BigInt(p));
    product *= p;
  }
  if (product < (BigInt(1) << 63)) q.value = product.convert_to<uint64_t>();
  return q;
}

SquarefreeModulus primorial_modulus(uint64_t y, const PrimeTable& table) {
  if (y > table.limit())
    throw std::domain_error("primorial_modulus: y beyond table limit");
  std::vector<uint64_t> primes;
  for (uint32_t p : table.primes()) {
    if (p > y) break;
    primes.push_back(p);
  }
  return squarefree_modulus_from_primes(std::move(primes));
}

uint64_t gaussian_moment(int k) {
  if (k < 0) throw std::domain_error("gaussian_moment: negative k");
  if (k % 2 == 1) return 0;
  // k even: 1 * 3 * ... * (k-1); k = 0 gives the empty product.
  uint64_t m = 1;
  for (int j = 1; j <= k - 1; j += 2) m *= static_cast<uint64_t>(j);
  return m;
}

}  // namespace sslab
