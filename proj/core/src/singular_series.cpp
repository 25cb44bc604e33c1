#include "sslab/singular_series.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sslab {

namespace {

std::vector<uint64_t> canonicalize(std::vector<int64_t> offsets,
                                   bool require_distinct) {
  if (offsets.empty())
    throw std::domain_error("offset tuple must have k >= 1");
  std::sort(offsets.begin(), offsets.end());
  if (require_distinct)
    for (size_t i = 0; i + 1 < offsets.size(); ++i)
      if (offsets[i] == offsets[i + 1])
        throw std::domain_error("offset tuple has a repeated element " +
                                std::to_string(offsets[i]));
  int64_t base = offsets.front();
  std::vector<uint64_t> out;
  out.reserve(offsets.size());
  for (int64_t d : offsets) out.push_back(static_cast<uint64_t>(d - base));
  return out;
}

}  // namespace

OffsetTuple::OffsetTuple(std::vector<int64_t> offsets)
    : offsets_(canonicalize(std::move(offsets), /*require_distinct=*/true)) {}

MultiTuple::MultiTuple(std::vector<int64_t> offsets)
    : offsets_(canonicalize(std::move(offsets), /*require_distinct=*/false)) {}

MultiTuple::MultiTuple(const OffsetTuple& t) : offsets_(t.offsets()) {}

GenericProductCache::GenericProductCache(uint64_t truncation_prime, int k_max)
    : GenericProductCache(truncation_prime, k_max, {},
                          PrimeTable(truncation_prime)) {
  generic_products_.assign(static_cast<size_t>(k_max_) + 1, 1.0);
  for (int k = 2; k <= k_max_; ++k) {
    double g = 1.0;
    for (uint32_t p : table_.primes())
      if (p > static_cast<uint64_t>(k)) g *= generic_factor(p, k);
    generic_products_[static_cast<size_t>(k)] = g;
  }
}

GenericProductCache::GenericProductCache(uint64_t truncation_prime, int k_max,
                                         std::vector<double> gk,
                                         PrimeTable table)
    : truncation_(truncation_prime),
      k_max_(k_max),
      generic_products_(std::move(gk)),
      table_(std::move(table)) {
  if (k_max_ < 1) throw std::domain_error("cache k_max must be >= 1");
  if (table_.limit() != truncation_)
    throw std::domain_error("cache table limit must equal truncation prime");
}

GenericProductCache GenericProductCache::from_parts(
    uint64_t truncation_prime, int k_max, std::vector<double> generic_products,
    PrimeTable table) {
  if (generic_products.size() != static_cast<size_t>(k_max) + 1)
    throw std::domain_error("cache payload size mismatch");
  return GenericProductCache(truncation_prime, k_max,
                             std::move(generic_products), std::move(table));
}

double GenericProductCache::generic_product(int k) const {
  if (k < 0 || k > k_max_)
    throw std::domain_error("generic_product: k outside [0, k_max]");
  return generic_products_[static_cast<size_t>(k)];
}

double GenericProductCache::generic_factor(uint64_t p, int k) {
  return special_factor(p, k, static_cast<unsigned>(k));
}

double GenericProductCache::special_factor(uint64_t p, int k, unsigned nu) {
  double pd = static_cast<double>(p);
  return std::pow(pd / (pd - 1.0), k) * ((pd - nu) / pd);
}

double GenericProductCache::tail_bound(int k) const {
  double P = static_cast<double>(truncation_);
  return std::expm1(tail_constant(k) / (P * std::log(P)));
}

unsigned nu_p(std::span<const uint64_t> offsets, uint64_t p) {
  if (offsets.size() <= 16) {
    uint64_t seen[16];
    unsigned count = 0;
    for (uint64_t d : offsets) {
      uint64_t r = d % p;
      bool dup = false;
      for (unsigned i = 0; i < count; ++i)
        if (seen[i] == r) {
          dup = true;
          break;
        }
      if (!dup) seen[count++] = r;
      if (count == p) break;  // full residue system
    }
    return count;
  }
  std::vector<uint64_t> residues;
  residues.reserve(offsets.size());
  for (uint64_t d : offsets) residues.push_back(d % p);
  std::sort(residues.begin(), residues.end());
  residues.erase(std::unique(residues.begin(), residues.end()),
                 residues.end());
  return static_cast<unsigned>(residues.size());
}

namespace {

// Distinct prime factors of n, appended to out. Uses spf lookups below the
// table limit and trial division above it.
void distinct_primes(uint64_t n, const PrimeTable& table,
                     std::vector<uint64_t>& out) {
  if (n <= 1) return;
  if (n <= table.limit()) {
    while (n > 1) {
      uint64_t p = table.spf(n);
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
    return;
  }
  for (uint32_t p : table.primes()) {
    if (static_cast<uint64_t>(p) * p > n) break;
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) {
    if (n > table.limit())
      throw TruncationError(
          "pairwise difference has a prime factor beyond the truncation "
          "prime; rebuild the cache with a larger P");
    out.push_back(n);
  }
}

}  // namespace

SeriesValue singular_series(const OffsetTuple& D,
                            const GenericProductCache& cache) {
  const auto& offs = D.offsets();
  const int k = static_cast<int>(offs.size());
  const uint64_t P = cache.truncation();
  if (k <= 1) return {1.0, 0.0, P};
  if (k > cache.k_max())
    throw std::domain_error("singular_series: k exceeds cache k_max");

  double value = cache.generic_product(k);

  // Small primes p <= k can never be generic.
  for (uint32_t p : cache.table().primes()) {
    if (p > static_cast<uint64_t>(k)) break;
    unsigned nu = nu_p(offs, p);
    if (nu == p) return {0.0, 0.0, P};
    value *= GenericProductCache::special_factor(p, k, nu);
  }

  // Primes p > k are corrective exactly when they divide some difference.
  std::vector<uint64_t> ps;
  for (size_t i = 0; i < offs.size(); ++i)
    for (size_t j = i + 1; j < offs.size(); ++j)
      distinct_primes(offs[j] - offs[i], cache.table(), ps);
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());

  for (uint64_t p : ps) {
    if (p <= static_cast<uint64_t>(k)) continue;  // already handled above
    unsigned nu = nu_p(offs, p);
    value *= static_cast<double>(p - nu) / static_cast<double>(p - k);
  }

  return {value, cache.tail_bound(k), P};
}

SeriesValue singular_series_zero(const OffsetTuple& D,
                                 const GenericProductCache& cache) {
  const auto& offs = D.offsets();
  const int k = static_cast<int>(offs.size());
  if (k > 12)
    throw BudgetError("singular_series_zero: subset expansion needs k <= 12");

  CompensatedAccumulator acc;
  double tail_abs = 0.0;
  // Empty subset: S(emptyset) = 1, sign (-1)^k.
  acc.add((k % 2 == 0) ? 1.0 : -1.0);

  std::vector<int64_t> subset;
  for (uint32_t mask = 1; mask < (1u << k); ++mask) {
    subset.clear();
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) subset.push_back(static_cast<int64_t>(offs[i]));
    int sign = ((k - static_cast<int>(subset.size())) % 2 == 0) ? 1 : -1;
    SeriesValue s = singular_series(OffsetTuple(subset), cache);
    acc.add(sign * s.value);
    tail_abs += abs_tail(s);
  }

  double value = acc.value();
  SeriesValue out;
  out.value = value;
  out.truncation = cache.truncation();
  out.tail_bound = (value == 0.0) ? tail_abs : tail_abs / std::abs(value);
  return out;
}

BigRational singular_series_mod(const MultiTuple& D,
                                const SquarefreeModulus& q) {
  const auto& offs = D.offsets();
  const unsigned k = static_cast<unsigned>(offs.size());
  BigRational value = 1;
  for (uint64_t p : q.primes) {
    unsigned nu = nu_p(offs, p);
    if (nu == p) return BigRational(0);
    // (1 - 1/p)^{-k} (1 - nu/p) = p^{k-1} (p - nu) / (p-1)^k
    BigInt pm1 = BigInt(p) - 1;
    BigRational factor(int_pow(BigInt(p), k - 1) * (BigInt(p) - nu),
                       int_pow(pm1, k));
    value *= factor;
  }
  return value;
}

BigRational singular_series_zero_mod(const MultiTuple& D,
                                     const SquarefreeModulus& q) {
  const auto& offs = D.offsets();
  const int k = static_cast<int>(offs.size());
  if (k > 12)
    throw BudgetError(
        "singular_series_zero_mod: subset expansion needs k <= 12");

  BigRational sum = (k % 2 == 0) ? 1 : -1;  // empty subset
  std::vector<int64_t> subset;
  for (uint32_t mask = 1; mask < (1u << k); ++mask) {
    subset.clear();
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) subset.push_back(static_cast<int64_t>(offs[i]));
    int sign = ((k - static_cast<int>(subset.size())) % 2 == 0) ? 1 : -1;
    BigRational s = singular_series_mod(MultiTuple(subset), q);
    sum += sign * s;
  }
  return sum;
}

}  // namespace sslab
