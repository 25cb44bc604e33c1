#include <cmath>
#include <random>

#include "doctest.h"
#include "sslab/singular_series.hpp"

using namespace sslab;

namespace {

// Independent oracle: evaluate prod_{p <= limit} (1-1/p)^{-k} (1-nu_p/p)
// literally, prime by prime, with a local segmented Eratosthenes sieve.
// Shares nothing with the generic/corrective factorization under test.
double direct_euler_product(const std::vector<uint64_t>& offsets,
                            uint64_t limit) {
  const int k = static_cast<int>(offsets.size());
  std::vector<uint32_t> base;
  {
    uint64_t root = static_cast<uint64_t>(std::sqrt(double(limit))) + 1;
    std::vector<bool> comp(root + 1, false);
    for (uint64_t p = 2; p <= root; ++p) {
      if (comp[p]) continue;
      base.push_back(static_cast<uint32_t>(p));
      for (uint64_t m = p * p; m <= root; m += p) comp[m] = true;
    }
  }
  double value = 1.0;
  auto apply = [&](uint64_t p) {
    unsigned nu = 0;
    uint64_t seen[12];
    for (uint64_t d : offsets) {
      uint64_t r = d % p;
      bool dup = false;
      for (unsigned i = 0; i < nu; ++i)
        if (seen[i] == r) dup = true;
      if (!dup) seen[nu++] = r;
    }
    double pd = static_cast<double>(p);
    value *= std::pow(pd / (pd - 1.0), k) * ((pd - nu) / pd);
  };
  const uint64_t seg = 1 << 20;
  for (uint64_t lo = 2; lo <= limit; lo += seg) {
    uint64_t hi = std::min(limit, lo + seg - 1);
    std::vector<bool> comp(hi - lo + 1, false);
    for (uint32_t p : base) {
      uint64_t p2 = uint64_t(p) * p;
      if (p2 > hi) break;
      for (uint64_t m = std::max(p2, ((lo + p - 1) / p) * p); m <= hi; m += p)
        comp[m - lo] = true;
    }
    for (uint64_t n = lo; n <= hi; ++n)
      if (n >= 2 && !comp[n - lo]) apply(n);
  }
  return value;
}

}  // namespace

TEST_SUITE("singular-series") {

TEST_CASE("nu_p") {
  OffsetTuple t({0, 2, 4});
  CHECK(nu_p(t, 2) == 1);
  CHECK(nu_p(t, 3) == 3);
  CHECK(nu_p(t, 5) == 3);
  CHECK(nu_p(MultiTuple({0, 0, 3}), 2) == 2);
  CHECK(nu_p(MultiTuple({0, 0, 0}), 7) == 1);
}

TEST_CASE("tuple canonicalization") {
  OffsetTuple a({5, 7, 11});
  CHECK(a.offsets() == std::vector<uint64_t>{0, 2, 6});
  OffsetTuple b({-3, -1, 3});
  CHECK(b.offsets() == std::vector<uint64_t>{0, 2, 6});
  CHECK_THROWS_AS(OffsetTuple({1, 1}), std::domain_error);
  MultiTuple m({4, 2, 2});
  CHECK(m.offsets() == std::vector<uint64_t>{0, 0, 2});
}

TEST_CASE("singular series: singleton, vanishing pair, twin value") {
  GenericProductCache cache(1000000, 6);
  CHECK(cache.generic_product(1) == 1.0);

  SeriesValue one = singular_series(OffsetTuple({0}), cache);
  CHECK(one.value == 1.0);
  CHECK(one.tail_bound == 0.0);

  SeriesValue vanish = singular_series(OffsetTuple({0, 1}), cache);
  CHECK(vanish.value == 0.0);
  CHECK(vanish.tail_bound == 0.0);

  SeriesValue twin = singular_series(OffsetTuple({0, 2}), cache);
  CHECK(twin.value == doctest::Approx(1.3203236).epsilon(1e-6));

  SeriesValue zero = singular_series_zero(OffsetTuple({0, 2}), cache);
  CHECK(zero.value == doctest::Approx(0.3203236).epsilon(1e-6));
  CHECK(singular_series_zero(OffsetTuple({0}), cache).value == 0.0);
  CHECK(singular_series_zero(OffsetTuple({0, 1}), cache).value == -1.0);
}

TEST_CASE("singular series agrees with the direct-product oracle") {
  GenericProductCache cache(1000000, 6);
  std::vector<std::vector<int64_t>> tuples = {
      {0, 2}, {0, 6}, {0, 2, 6}, {0, 4, 6}, {0, 30}, {0, 2, 12, 14}};
  for (const auto& raw : tuples) {
    OffsetTuple D(raw);
    SeriesValue got = singular_series(D, cache);
    double want = direct_euler_product(D.offsets(), cache.truncation());
    CHECK(got.value == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("twin tuple matches a P = 1e8 full-product evaluation" *
          doctest::timeout(120)) {
  GenericProductCache cache(1000000, 4);
  OffsetTuple twin({0, 2});
  SeriesValue v6 = singular_series(twin, cache);

  const uint64_t big = 100000000;
  double v8 = direct_euler_product(twin.offsets(), big);
  double tb8 =
      std::expm1(GenericProductCache::tail_constant(2) /
                 (static_cast<double>(big) * std::log(static_cast<double>(big))));
  double budget = std::abs(v6.value) * v6.tail_bound + std::abs(v8) * tb8;
  CHECK(std::abs(v6.value - v8) <= budget);
}

TEST_CASE("truncation error when a difference has a large prime factor") {
  GenericProductCache cache(100, 4);
  CHECK_THROWS_AS(singular_series(OffsetTuple({0, 202}), cache),
                  TruncationError);
}

TEST_CASE("translation invariance is structural") {
  GenericProductCache cache(10000, 4);
  SeriesValue a = singular_series(OffsetTuple({0, 2, 6}), cache);
  SeriesValue b = singular_series(OffsetTuple({100, 102, 106}), cache);
  CHECK(a.value == b.value);
  CHECK(a.tail_bound == b.tail_bound);
}

TEST_CASE("truncation monotonicity on random pairs and triples") {
  GenericProductCache small(10000, 4);
  GenericProductCache large(100000, 4);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + static_cast<int>(rng() % 2);
    std::vector<int64_t> offs = {0};
    while (static_cast<int>(offs.size()) < k) {
      int64_t d = 1 + static_cast<int64_t>(rng() % 1000);
      bool dup = false;
      for (int64_t o : offs) dup = dup || o == d;
      if (!dup) offs.push_back(d);
    }
    OffsetTuple D(offs);
    SeriesValue lo = singular_series(D, small);
    SeriesValue hi = singular_series(D, large);
    CHECK(std::abs(hi.value - lo.value) <=
          std::abs(lo.value) * lo.tail_bound + 1e-300);
    CHECK(hi.tail_bound <= lo.tail_bound);
  }
}

TEST_CASE("finite-modulus singular series, exact") {
  SquarefreeModulus q2 = squarefree_modulus_from_primes({2});
  SquarefreeModulus q6 = squarefree_modulus_from_primes({2, 3});

  CHECK(singular_series_mod(MultiTuple({0, 2}), q2) == BigRational(2));
  CHECK(singular_series_mod(MultiTuple({0, 1}), q6) == BigRational(0));
  // S({0,0,0};q) = (q/phi)^2
  CHECK(singular_series_mod(MultiTuple({0, 0, 0}), q6) == BigRational(9));
  SquarefreeModulus q1 = squarefree_modulus_from_primes({});
  CHECK(singular_series_mod(MultiTuple({0, 5}), q1) == BigRational(1));
}

TEST_CASE("centered finite-modulus series, exact") {
  SquarefreeModulus q2 = squarefree_modulus_from_primes({2});
  SquarefreeModulus q6 = squarefree_modulus_from_primes({2, 3});

  CHECK(singular_series_zero_mod(MultiTuple({0}), q6) == BigRational(0));
  CHECK(singular_series_zero_mod(MultiTuple({0, 0, 0}), q6) == BigRational(2));
  CHECK(singular_series_zero_mod(MultiTuple({0, 1}), q2) == BigRational(-1));
}

TEST_CASE("collapse of one repeated element costs a factor q/phi") {
  std::mt19937_64 rng(99);
  std::vector<uint64_t> prime_pool = {2, 3, 5, 7, 11, 13};
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<uint64_t> ps;
    for (uint64_t p : prime_pool)
      if (rng() & 1) ps.push_back(p);
    SquarefreeModulus q = squarefree_modulus_from_primes(ps);

    int k = 2 + static_cast<int>(rng() % 3);
    std::vector<int64_t> offs;
    for (int i = 0; i < k; ++i)
      offs.push_back(static_cast<int64_t>(rng() % 60));
    std::vector<int64_t> with_repeat = offs;
    with_repeat.push_back(offs[0]);  // exactly one extra copy

    BigRational lhs = singular_series_mod(MultiTuple(with_repeat), q);
    BigRational rhs =
        q.q_over_phi() * singular_series_mod(MultiTuple(offs), q);
    CHECK(lhs == rhs);
  }
}

TEST_CASE("subset consistency inverts the alternating sum") {
  SquarefreeModulus q = squarefree_modulus_from_primes({2, 3, 5});
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    int k = 1 + static_cast<int>(rng() % 4);
    std::vector<int64_t> offs;
    for (int i = 0; i < k; ++i)
      offs.push_back(static_cast<int64_t>(rng() % 30));
    MultiTuple D(offs);

    BigRational total = 1;  // empty subset: S0(emptyset) = 1
    for (uint32_t mask = 1; mask < (1u << k); ++mask) {
      std::vector<int64_t> sub;
      for (int i = 0; i < k; ++i)
        if (mask & (1u << i))
          sub.push_back(static_cast<int64_t>(D.offsets()[size_t(i)]));
      total += singular_series_zero_mod(MultiTuple(sub), q);
    }
    CHECK(singular_series_mod(D, q) == total);
  }
}

TEST_CASE("series value budget guards") {
  GenericProductCache cache(1000, 4);
  CHECK_THROWS_AS(singular_series(OffsetTuple({0, 1, 2, 3, 4}), cache),
                  std::domain_error);  // k beyond cache k_max
}

}  // TEST_SUITE
