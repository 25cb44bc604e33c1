#include "sslab/reduced_residues.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sslab/parallel.hpp"

namespace sslab {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kLog2Pi = 1.8378770664093454836;

// Numerator of the window deviation: q * count - h * phi, always an integer.
struct WindowScan {
  uint64_t qv;
  uint64_t h;
  uint64_t phi;
  const std::vector<uint8_t>& coprime;

  // Count of coprime values in (n, n+h], i.e. m in [n+1, n+h] mod q.
  uint64_t count_from_scratch(uint64_t n) const {
    uint64_t full = h / qv, rem = h % qv;
    uint64_t c = full * phi;
    uint64_t r = (n + 1) % qv;
    for (uint64_t i = 0; i < rem; ++i) {
      c += coprime[r];
      ++r;
      if (r == qv) r = 0;
    }
    return c;
  }
};

}  // namespace

MomentRecord mk_int(const SquarefreeModulus& q, uint64_t h, int k, int threads,
                    uint64_t window_start) {
  if (k < 1) throw std::domain_error("mk_int: k must be >= 1");
  if (h < 1) throw std::domain_error("mk_int: h must be >= 1");
  if (!q.value)
    throw BudgetError("mk_int: modulus exceeds the machine-word budget");
  const uint64_t qv = *q.value;
  if (qv > 1000000000ull)
    throw BudgetError("mk_int: q iteration budget 1e9 exceeded");
  if (h > (uint64_t{1} << 62) / qv)
    throw BudgetError("mk_int: q*h deviation numerator would overflow");

  MomentRecord rec;
  rec.q = q;
  rec.h = h;
  rec.k = k;
  if (qv == 1) {
    rec.value = 0;
    rec.float_value = 0.0;
    return rec;
  }

  std::vector<uint8_t> coprime(qv, 1);
  for (uint64_t p : q.primes)
    for (uint64_t r = 0; r < qv; r += p) coprime[r] = 0;
  uint64_t phi = 0;
  for (uint8_t c : coprime) phi += c;

  WindowScan scan{qv, h, phi, coprime};
  const int64_t h_phi = static_cast<int64_t>(h * phi);

  const uint64_t chunk_len =
      std::max<uint64_t>(65536, qv / (4 * static_cast<uint64_t>(
                                          std::max(1, resolve_threads(threads)))));
  const uint64_t n_chunks = (qv + chunk_len - 1) / chunk_len;
  std::vector<BigInt> partial(n_chunks, BigInt(0));

  parallel_blocks(n_chunks, threads, [&](uint64_t c) {
    uint64_t lo = c * chunk_len;
    uint64_t hi = std::min(qv, lo + chunk_len);
    uint64_t n = window_start + lo;
    uint64_t count = scan.count_from_scratch(n);
    BigInt acc = 0;
    __int128 fast_acc = 0;
    const bool fast_ok = k <= 4;
    for (uint64_t i = lo; i < hi; ++i) {
      int64_t e = static_cast<int64_t>(qv) * static_cast<int64_t>(count) -
                  h_phi;
      if (fast_ok && e > -(int64_t{1} << 28) && e < (int64_t{1} << 28)) {
        __int128 t = e;
        for (int j = 1; j < k; ++j) t *= e;
        fast_acc += t;
        // 4096-term flushes keep the 128-bit partial far from overflow
        if ((i & 4095) == 4095) {
          acc += BigInt(fast_acc);
          fast_acc = 0;
        }
      } else {
        BigInt t = e;
        for (int j = 1; j < k; ++j) t *= e;
        acc += t;
      }
      // slide: m = n+1 leaves the window, m = n+1+h enters it
      count -= coprime[(n + 1) % qv];
      count += coprime[(n + 1 + h) % qv];
      ++n;
    }
    acc += BigInt(fast_acc);
    partial[c] = acc;
  });

  BigInt total = 0;
  for (const BigInt& p : partial) total += p;
  rec.value = BigRational(total, int_pow(BigInt(qv), static_cast<unsigned>(k)));
  rec.float_value = to_double(rec.value);
  return rec;
}

namespace {

struct DivisorData {
  uint64_t d;
  int mobius;    // (-1)^(number of primes)
  uint64_t phi;
  std::vector<uint32_t> coprime_a;  // 1 <= a < d, gcd(a, d) = 1
};

std::vector<DivisorData> proper_divisors(const SquarefreeModulus& q) {
  size_t np = q.primes.size();
  std::vector<DivisorData> divs;
  for (uint32_t mask = 1; mask < (1u << np); ++mask) {
    DivisorData dd;
    dd.d = 1;
    dd.phi = 1;
    int bits = 0;
    for (size_t i = 0; i < np; ++i)
      if (mask & (1u << i)) {
        dd.d *= q.primes[i];
        dd.phi *= q.primes[i] - 1;
        ++bits;
      }
    dd.mobius = (bits % 2 == 0) ? 1 : -1;
    for (uint64_t a = 1; a < dd.d; ++a)
      if (std::gcd(a, dd.d) == 1) dd.coprime_a.push_back(static_cast<uint32_t>(a));
    divs.push_back(std::move(dd));
  }
  return divs;
}

std::complex<double> exponential_sum(uint64_t a, uint64_t d, uint64_t h) {
  // E(a/d) = sum_{m=1}^{h} e(m a/d), geometric since e(a/d) != 1.
  const double tau = 2.0 * M_PI * static_cast<double>(a) / static_cast<double>(d);
  std::complex<double> w = std::polar(1.0, tau);
  std::complex<double> wh = std::polar(1.0, tau * static_cast<double>(h % d));
  return w * (1.0 - wh) / (1.0 - w);
}

uint64_t mulmod(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

}  // namespace

BigRational vk_int_bruteforce(const SquarefreeModulus& q, uint64_t h, int k) {
  if (k < 1) throw std::domain_error("vk_int_bruteforce: k must be >= 1");
  if (h < 1) throw std::domain_error("vk_int_bruteforce: h must be >= 1");
  if (q.primes.size() > 3)
    throw BudgetError("vk_int_bruteforce: q must have at most 3 primes");
  if (!q.value) throw BudgetError("vk_int_bruteforce: modulus too large");
  const uint64_t L = *q.value;
  if (L == 1) return BigRational(0);  // no divisors > 1

  std::vector<DivisorData> divs = proper_divisors(q);
  // E values per divisor, indexed by numerator.
  std::vector<std::vector<std::complex<double>>> evals(divs.size());
  for (size_t i = 0; i < divs.size(); ++i) {
    evals[i].assign(divs[i].d, {0.0, 0.0});
    for (uint32_t a : divs[i].coprime_a)
      evals[i][a] = exponential_sum(a, divs[i].d, h);
  }

  uint64_t budget = 0;
  BigRational vk = 0;

  std::vector<size_t> tuple(static_cast<size_t>(k), 0);
  for (;;) {
    // one divisor tuple (d_1..d_k)
    std::complex<double> group(0.0, 0.0);
    double scale = 0.0;

    const DivisorData& last = divs[tuple[static_cast<size_t>(k) - 1]];
    const uint64_t g_last = L / last.d;

    std::vector<size_t> a_idx(static_cast<size_t>(k) - 1, 0);
    bool tuple_done = (k == 1);
    if (k == 1) {
      // lone coordinate: a_1/d_1 must be integral, impossible for d_1 > 1
      group = {0.0, 0.0};
    }
    while (!tuple_done) {
      uint64_t s = 0;
      std::complex<double> prod(1.0, 0.0);
      for (int i = 0; i + 1 < k; ++i) {
        const DivisorData& dd = divs[tuple[static_cast<size_t>(i)]];
        uint32_t a = dd.coprime_a[a_idx[static_cast<size_t>(i)]];
        s = (s + mulmod(a, L / dd.d, L)) % L;
        prod *= evals[tuple[static_cast<size_t>(i)]][a];
      }
      if (++budget > 100000000ull)
        throw BudgetError("vk_int_bruteforce: enumeration budget 1e8");
      // a_k (L/d_k) == -s (mod L): solvable iff (L/d_k) | s
      uint64_t t = (L - s) % L;
      if (t % g_last == 0) {
        uint64_t ak = (t / g_last) % last.d;
        if (ak != 0 && std::gcd(ak, last.d) == 1) {
          std::complex<double> term = prod * evals[tuple[static_cast<size_t>(k) - 1]][ak];
          group += term;
          scale += std::abs(term);
        }
      }
      int i = k - 2;
      while (i >= 0 && ++a_idx[static_cast<size_t>(i)] ==
                           divs[tuple[static_cast<size_t>(i)]].coprime_a.size()) {
        a_idx[static_cast<size_t>(i)] = 0;
        --i;
      }
      if (i < 0) tuple_done = true;
    }

    double guard = 1e-9 * std::max(1.0, scale);
    double rounded = std::round(group.real());
    if (std::abs(group.imag()) > guard ||
        std::abs(group.real() - rounded) > guard)
      throw ConsistencyError(
          "vk_int_bruteforce: divisor-tuple group sum is not integral");
    if (rounded != 0.0) {
      BigRational coeff = 1;
      for (int i = 0; i < k; ++i) {
        const DivisorData& dd = divs[tuple[static_cast<size_t>(i)]];
        coeff *= BigRational(BigInt(dd.mobius), BigInt(dd.phi));
      }
      vk += coeff * BigRational(BigInt(static_cast<int64_t>(rounded)));
    }

    int i = k - 1;
    while (i >= 0 && ++tuple[static_cast<size_t>(i)] == divs.size()) {
      tuple[static_cast<size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return vk;
}

BigRational vk_to_mk(const SquarefreeModulus& q, int k, const BigRational& vk) {
  BigRational phi_over_q = q.phi_over_q;
  BigRational scale = BigRational(q.modulus_big());
  return scale * rat_pow(phi_over_q, static_cast<unsigned>(k)) * vk;
}

DiagonalIdentityReport diagonal_identity_checks(const SquarefreeModulus& q,
                                                uint64_t h) {
  if (h < 1) throw std::domain_error("diagonal_identity_checks: h >= 1");
  DiagonalIdentityReport rep;
  const BigRational qp = q.q_over_phi();

  // (a) triple diagonal. Every S0({d,d,d};q) equals S0({0,0,0};q) because
  // canonicalization translates the tuple, so the d-sum is h equal terms.
  BigRational s000 = singular_series_zero_mod(MultiTuple({0, 0, 0}), q);
  rep.lhs_triple = 2 * BigRational(h) * s000;
  rep.rhs_triple = 2 * BigRational(h) * qp * qp - 6 * BigRational(h) * qp +
                   4 * BigRational(h);
  rep.pass_triple = rep.lhs_triple == rep.rhs_triple;

  // (b) pair diagonal, grouped by the gap g = |d - d3|.
  BigRational lhs = BigRational(h) * s000;  // d = d3 terms share S0({0,0,0})
  BigRational pair_sum = BigRational(h) * qp;  // S({d,d};q) = q/phi
  for (uint64_t g = 1; g < h; ++g) {
    BigRational f =
        singular_series_zero_mod(MultiTuple({0, 0, static_cast<int64_t>(g)}), q);
    BigRational s2 =
        singular_series_mod(MultiTuple({0, static_cast<int64_t>(g)}), q);
    lhs += 2 * BigRational(h - g) * f;
    pair_sum += 2 * BigRational(h - g) * s2;
  }
  rep.lhs_pair = lhs;
  rep.rhs_pair = (qp - 2) * (pair_sum - BigRational(h) * BigRational(h));
  rep.pass_pair = rep.lhs_pair == rep.rhs_pair;

  if (!rep.pass_triple)
    throw IdentityError("diagonal identity (a) failed at h = " +
                        std::to_string(h) + ": lhs = " +
                        rep.lhs_triple.str() + ", rhs = " +
                        rep.rhs_triple.str());
  if (!rep.pass_pair)
    throw IdentityError("diagonal identity (b) failed at h = " +
                        std::to_string(h) + ": lhs = " + rep.lhs_pair.str() +
                        ", rhs = " + rep.rhs_pair.str());
  return rep;
}

BridgeReport r3_v3_bridge(const SquarefreeModulus& q, uint64_t h,
                          double r3_value, int threads) {
  BridgeReport rep;
  MomentRecord m3 = mk_int(q, h, 3, threads);
  // V_3 = m_3 / (q (phi/q)^3)
  BigRational v3 = m3.value * rat_pow(q.q_over_phi(), 3) /
                   BigRational(q.modulus_big());
  rep.v3 = to_double(v3);

  const double qp = to_double(q.q_over_phi());
  const double hd = static_cast<double>(h);
  const double lg = std::log(hd);
  const double B = 1.0 - kEulerGamma - kLog2Pi;
  rep.assembled = rep.v3 - hd * qp * qp + 3.0 * hd * lg * qp -
                  3.0 * B * hd * qp - 6.0 * hd * lg + 6.0 * B * hd + 4.0 * hd;
  rep.r3 = r3_value;
  rep.residual = r3_value - rep.assembled;
  rep.budget = std::sqrt(hd) * qp;
  return rep;
}

}  // namespace sslab
