#include <cmath>

#include "doctest.h"
#include "sslab/reduced_residues.hpp"
#include "sslab/rk_sums.hpp"

using namespace sslab;

namespace {

SquarefreeModulus Q(std::vector<uint64_t> ps) {
  return squarefree_modulus_from_primes(std::move(ps));
}

}  // namespace

TEST_SUITE("reduced-residues") {

TEST_CASE("mk_int pinned examples") {
  CHECK(mk_int(Q({2}), 1, 3).value == BigRational(0));
  CHECK(mk_int(Q({2}), 1, 2).value == BigRational(1, 2));
  CHECK(mk_int(Q({2, 3}), 1, 2).value == BigRational(4, 3));
}

TEST_CASE("mk_int denominator is controlled by q^k") {
  for (auto& q : {Q({2, 3}), Q({2, 5}), Q({3, 7})}) {
    for (uint64_t h = 1; h <= 4; ++h)
      for (int k = 1; k <= 4; ++k) {
        BigRational v = mk_int(q, h, k).value;
        BigInt qk = int_pow(BigInt(*q.value), static_cast<unsigned>(k));
        CHECK(qk % denominator(v) == 0);
      }
  }
}

TEST_CASE("mk_int window-start invariance and thread determinism") {
  SquarefreeModulus q = Q({2, 3, 5, 7});
  for (uint64_t h : {1, 3, 7, 250}) {
    BigRational base = mk_int(q, h, 3, 1).value;
    CHECK(mk_int(q, h, 3, 1, 17).value == base);
    CHECK(mk_int(q, h, 3, 1, 209).value == base);
    CHECK(mk_int(q, h, 3, 4).value == base);
  }
}

TEST_CASE("mk_int handles h longer than q") {
  SquarefreeModulus q = Q({2, 3});
  // window count = full periods * phi + partial; m_k still exact
  BigRational v = mk_int(q, 14, 2).value;
  // direct check
  std::vector<int> coprime = {0, 1, 0, 0, 0, 1};
  BigRational expect = 0;
  for (int n = 1; n <= 6; ++n) {
    int count = 0;
    for (int m = 1; m <= 14; ++m) count += coprime[size_t((n + m) % 6)];
    BigRational dev = BigRational(count) - BigRational(14 * 2, 6);
    expect += dev * dev;
  }
  CHECK(v == expect);
}

TEST_CASE("vk_int pinned examples and the m_k identity") {
  SquarefreeModulus q2 = Q({2});
  CHECK(vk_int_bruteforce(q2, 1, 2) == BigRational(1));
  CHECK(vk_to_mk(q2, 2, BigRational(1)) == BigRational(1, 2));
  CHECK(vk_to_mk(q2, 3, vk_int_bruteforce(q2, 1, 3)) == BigRational(0));

  SquarefreeModulus q6 = Q({2, 3});
  CHECK(vk_int_bruteforce(q6, 1, 2) == BigRational(2));
  CHECK(vk_to_mk(q6, 2, BigRational(2)) == BigRational(4, 3));
}

TEST_CASE("m_k = q (phi/q)^k V_k exactly on a small grid") {
  for (auto& q : {Q({2}), Q({3}), Q({5}), Q({2, 3}), Q({2, 5}), Q({3, 5}),
                  Q({2, 3, 5})}) {
    for (uint64_t h = 1; h <= 3; ++h)
      for (int k = 1; k <= 3; ++k) {
        BigRational vk = vk_int_bruteforce(q, h, k);
        CHECK(vk_to_mk(q, k, vk) == mk_int(q, h, k).value);
      }
  }
}

TEST_CASE("vk budget guard") {
  CHECK_THROWS_AS(vk_int_bruteforce(Q({2, 3, 5, 7}), 2, 2), BudgetError);
}

TEST_CASE("even moments are nonnegative") {
  for (auto& q : {Q({2, 3}), Q({2, 3, 5}), Q({3, 7, 11})}) {
    for (uint64_t h : {1, 4, 9, 30})
      for (int k : {2, 4}) CHECK(mk_int(q, h, k).value >= 0);
  }
}

TEST_CASE("m_2 equals the centered pair sum for composite moduli") {
  for (auto& q : {Q({2, 3}), Q({2, 3, 5}), Q({2, 3, 5, 7})}) {
    for (uint64_t h : {5, 20}) {
      BigRational pair_sum = 0;
      for (uint64_t d1 = 1; d1 <= h; ++d1)
        for (uint64_t d2 = 1; d2 <= h; ++d2)
          pair_sum += singular_series_zero_mod(
              MultiTuple({static_cast<int64_t>(d1), static_cast<int64_t>(d2)}),
              q);
      CHECK(vk_to_mk(q, 2, pair_sum) == mk_int(q, h, 2).value);
    }
  }
}

TEST_CASE("diagonal identities hold exactly") {
  // q/phi = 2 makes both sides of (a) vanish
  DiagonalIdentityReport r1 = diagonal_identity_checks(Q({2}), 1);
  CHECK(r1.lhs_triple == BigRational(0));
  CHECK(r1.rhs_triple == BigRational(0));
  CHECK(r1.pass_triple);
  CHECK(r1.pass_pair);

  DiagonalIdentityReport r2 = diagonal_identity_checks(Q({2, 3}), 2);
  CHECK(r2.pass_triple);
  CHECK(r2.pass_pair);
  CHECK(r2.lhs_triple == BigRational(8));  // 2h(q/phi)^2-6h(q/phi)+4h at h=2

  DiagonalIdentityReport r3 = diagonal_identity_checks(Q({2, 3, 5}), 10);
  CHECK(r3.pass_triple);
  CHECK(r3.pass_pair);
}

TEST_CASE("bridge report smoke values") {
  SquarefreeModulus q2 = Q({2});
  BridgeReport rep = r3_v3_bridge(q2, 3, 0.679676, 1);
  CHECK(std::isfinite(rep.residual));
  CHECK(rep.budget == doctest::Approx(std::sqrt(3.0) * 2.0));

  // h = 1: R_3(1) = 0; the assembled correction stays within a small budget
  SquarefreeModulus qbig = Q({2, 3, 5, 7, 11, 13, 17});
  BridgeReport r1 = r3_v3_bridge(qbig, 1, 0.0, 1);
  CHECK(std::abs(r1.residual) <= 20.0);
}

TEST_CASE("bridge residual fixture at q = 510510, h = 50") {
  // Frozen from the calibration run: residual 284.1 with the small-q
  // surrogate modulus (the two sides only share the h^{1/2} scale once q
  // grows with h, which is out of reach; see the budget column).
  SquarefreeModulus q = squarefree_modulus_from_primes({2, 3, 5, 7, 11, 13, 17});
  static GenericProductCache big(1000000, 8);
  double r3 = rk_bruteforce(3, 50, big).value;
  BridgeReport rep = r3_v3_bridge(q, 50, r3, 2);
  CHECK(std::abs(rep.residual) <= 320.0);
  CHECK(rep.budget == doctest::Approx(std::sqrt(50.0) * to_double(q.q_over_phi())));
}

}  // TEST_SUITE
