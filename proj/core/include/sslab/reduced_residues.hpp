#pragma once

#include <cstdint>
#include <string>

#include "sslab/arith.hpp"
#include "sslab/singular_series.hpp"

namespace sslab {

struct MomentRecord {
  SquarefreeModulus q;
  uint64_t h = 0;
  int k = 0;
  BigRational value;         // exact moment
  double float_value = 0.0;  // value rounded to double
};

// k-th centered moment of the count of reduced residues mod q in a sliding
// window of length h, exact: sum_n (count - h phi/q)^k over a complete
// residue system. window_start only shifts which system is summed; the
// result is invariant (tested, not assumed).
MomentRecord mk_int(const SquarefreeModulus& q, uint64_t h, int k,
                    int threads = 1, uint64_t window_start = 1);

// The singular series sum V_k(q;h): nested sum over divisor tuples of q and
// coprime numerators with an integral total, weighted by exponential sums
// E(a/q) = sum_{m<=h} e(ma/q). Terms are grouped by divisor tuple; each
// group sum is a rational integer, so the result is exact. q is limited to
// three primes.
BigRational vk_int_bruteforce(const SquarefreeModulus& q, uint64_t h, int k);

// m_k = q (phi/q)^k V_k.
BigRational vk_to_mk(const SquarefreeModulus& q, int k, const BigRational& vk);

struct DiagonalIdentityReport {
  BigRational lhs_triple, rhs_triple;  // 2 sum_d S0({d,d,d};q)  vs closed form
  BigRational lhs_pair, rhs_pair;      // sum_{d,d3} S0({d,d,d3};q) vs factored
  bool pass_triple = false;
  bool pass_pair = false;
};

// Verifies, in exact arithmetic:
//   (a) 2 sum_{d<=h} S0({d,d,d};q) = 2h (q/phi)^2 - 6h (q/phi) + 4h
//   (b) sum_{d,d3<=h} S0({d,d,d3};q)
//         = (q/phi - 2) (sum_{d,d3<=h} S({d,d3};q) - h^2)
// Throws IdentityError with a witness on any mismatch.
DiagonalIdentityReport diagonal_identity_checks(const SquarefreeModulus& q,
                                                uint64_t h);

struct BridgeReport {
  double v3 = 0.0;        // V_3(q;h) recovered from m_3
  double assembled = 0.0; // V_3 with the diagonal corrections applied
  double r3 = 0.0;        // reference R_3(h)
  double residual = 0.0;  // r3 - assembled
  double budget = 0.0;    // sqrt(h) * q/phi(q), the error-term scale
};

// Assembles R_3(h) from V_3(q;h) plus the exact diagonal corrections
//   -h(q/phi)^2 + 3h log h (q/phi) - 3Bh (q/phi) - 6h log h + 6Bh + 4h
// with B = 1 - gamma - log 2pi, and reports the residual against the given
// R_3 value. Reporting only; nothing is asserted here.
BridgeReport r3_v3_bridge(const SquarefreeModulus& q, uint64_t h,
                          double r3_value, int threads = 1);

}  // namespace sslab
