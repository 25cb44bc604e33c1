#include "sslab/function_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace sslab::ff {

namespace {

bool small_prime(uint32_t p) {
  if (p < 2) return false;
  for (uint32_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

uint32_t check_same_field(const Poly& a, const Poly& b) {
  uint32_t p = a.p() ? a.p() : b.p();
  if (a.p() && b.p() && a.p() != b.p())
    throw std::domain_error("polynomial field mismatch");
  if (p == 0) throw std::domain_error("polynomial field unset");
  return p;
}

}  // namespace

PrimeField::PrimeField(uint32_t p_) : p(p_) {
  if (!small_prime(p) || p > 61)
    throw std::domain_error("field size must be a prime <= 61, got " +
                            std::to_string(p));
}

uint32_t PrimeField::inv(uint32_t a) const {
  if (a == 0) throw std::domain_error("inverse of zero field element");
  // Fermat: a^(p-2)
  uint32_t result = 1, base = a % p;
  uint32_t e = p - 2;
  while (e) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
    e >>= 1;
  }
  return result;
}

Poly::Poly(uint32_t p, std::vector<uint32_t> coeffs)
    : p_(p), c_(std::move(coeffs)) {
  if (p_ < 2) throw std::domain_error("polynomial needs a field of size >= 2");
  for (auto& c : c_) c %= p_;
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

Poly Poly::from_index(uint32_t p, uint64_t index) {
  std::vector<uint32_t> c;
  while (index) {
    c.push_back(static_cast<uint32_t>(index % p));
    index /= p;
  }
  return Poly(p, std::move(c));
}

uint64_t Poly::to_index() const {
  uint64_t idx = 0;
  for (size_t i = c_.size(); i-- > 0;) idx = idx * p_ + c_[i];
  return idx;
}

std::string Poly::str() const {
  if (is_zero()) return "0";
  std::string s;
  for (int i = deg(); i >= 0; --i) {
    uint32_t c = coeff(i);
    if (c == 0) continue;
    if (!s.empty()) s += "+";
    if (i == 0) {
      s += std::to_string(c);
    } else {
      if (c != 1) s += std::to_string(c) + "*";
      s += (i == 1) ? "T" : "T^" + std::to_string(i);
    }
  }
  return s;
}

Poly add(const Poly& a, const Poly& b) {
  uint32_t p = check_same_field(a, b);
  std::vector<uint32_t> c(std::max(a.coeffs().size(), b.coeffs().size()), 0);
  for (size_t i = 0; i < c.size(); ++i)
    c[i] = (a.coeff(static_cast<int>(i)) + b.coeff(static_cast<int>(i))) % p;
  return Poly(p, std::move(c));
}

Poly neg(const Poly& a) {
  if (a.p() == 0) throw std::domain_error("polynomial field unset");
  std::vector<uint32_t> c = a.coeffs();
  for (auto& x : c) x = (a.p() - x) % a.p();
  return Poly(a.p(), std::move(c));
}

Poly sub(const Poly& a, const Poly& b) { return add(a, neg(b)); }

Poly scale(const Poly& a, uint32_t c) {
  std::vector<uint32_t> out = a.coeffs();
  for (auto& x : out) x = static_cast<uint32_t>((uint64_t(x) * c) % a.p());
  return Poly(a.p(), std::move(out));
}

Poly mul(const Poly& a, const Poly& b) {
  uint32_t p = check_same_field(a, b);
  if (a.is_zero() || b.is_zero()) return Poly::zero(p);
  std::vector<uint32_t> c(a.coeffs().size() + b.coeffs().size() - 1, 0);
  for (size_t i = 0; i < a.coeffs().size(); ++i) {
    if (a.coeffs()[i] == 0) continue;
    for (size_t j = 0; j < b.coeffs().size(); ++j)
      c[i + j] = static_cast<uint32_t>(
          (c[i + j] + uint64_t(a.coeffs()[i]) * b.coeffs()[j]) % p);
  }
  return Poly(p, std::move(c));
}

DivMod divmod(const Poly& a, const Poly& b) {
  uint32_t p = check_same_field(a, b);
  if (b.is_zero()) throw std::domain_error("division by the zero polynomial");
  PrimeField f(p);
  if (a.deg() < b.deg()) return {Poly::zero(p), a};
  std::vector<uint32_t> rem = a.coeffs();
  std::vector<uint32_t> quot(static_cast<size_t>(a.deg() - b.deg()) + 1, 0);
  uint32_t lead_inv = f.inv(b.lead());
  for (int i = a.deg(); i >= b.deg(); --i) {
    uint32_t c = rem[static_cast<size_t>(i)];
    if (c == 0) continue;
    uint32_t q = f.mul(c, lead_inv);
    quot[static_cast<size_t>(i - b.deg())] = q;
    for (int j = 0; j <= b.deg(); ++j) {
      auto& r = rem[static_cast<size_t>(i - b.deg() + j)];
      r = f.sub(r, f.mul(q, b.coeff(j)));
    }
  }
  return {Poly(p, std::move(quot)), Poly(p, std::move(rem))};
}

Poly poly_mod(const Poly& a, const Poly& b) { return divmod(a, b).rem; }

Poly make_monic(const Poly& a) {
  if (a.is_zero() || a.monic()) return a;
  PrimeField f(a.p());
  return scale(a, f.inv(a.lead()));
}

Poly gcd(Poly a, Poly b) {
  while (!b.is_zero()) {
    Poly r = poly_mod(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return make_monic(a);
}

Poly derivative(const Poly& a) {
  if (a.deg() < 1) return Poly::zero(a.p() ? a.p() : 2);
  std::vector<uint32_t> c(static_cast<size_t>(a.deg()), 0);
  for (int i = 1; i <= a.deg(); ++i)
    c[static_cast<size_t>(i - 1)] =
        static_cast<uint32_t>((uint64_t(a.coeff(i)) * (uint64_t(i) % a.p())) %
                              a.p());
  return Poly(a.p(), std::move(c));
}

uint32_t eval(const Poly& a, uint32_t x) {
  uint32_t p = a.p();
  uint64_t v = 0;
  for (size_t i = a.coeffs().size(); i-- > 0;) v = (v * x + a.coeffs()[i]) % p;
  return static_cast<uint32_t>(v);
}

bool is_squarefree(const Poly& a) {
  if (a.is_zero()) return false;
  if (a.deg() == 0) return true;
  Poly d = derivative(a);
  if (d.is_zero()) return false;  // a is a p-th power in character p
  return gcd(a, d).deg() == 0;
}

uint64_t norm(const Poly& a) {
  if (a.is_zero()) return 0;
  uint64_t n = 1;
  for (int i = 0; i < a.deg(); ++i) n *= a.p();
  return n;
}

std::vector<Poly> monic_of_degree(uint32_t p, int d) {
  if (d < 0) throw std::domain_error("monic_of_degree: negative degree");
  uint64_t count = 1;
  for (int i = 0; i < d; ++i) count *= p;
  std::vector<Poly> out;
  out.reserve(count);
  for (uint64_t low = 0; low < count; ++low) {
    Poly lower = Poly::from_index(p, low);
    std::vector<uint32_t> c(static_cast<size_t>(d) + 1, 0);
    for (int i = 0; i < d; ++i) c[static_cast<size_t>(i)] = lower.coeff(i);
    c[static_cast<size_t>(d)] = 1;
    out.push_back(Poly(p, std::move(c)));
  }
  return out;
}

std::vector<Poly> irreducibles_up_to(uint32_t p, int max_deg) {
  if (max_deg > 12)
    throw BudgetError("irreducible enumeration capped at degree 12");
  std::vector<Poly> irr;
  for (int d = 1; d <= max_deg; ++d) {
    for (Poly& f : monic_of_degree(p, d)) {
      bool irreducible = true;
      for (const Poly& q : irr) {
        if (2 * q.deg() > d) break;
        if (poly_mod(f, q).is_zero()) {
          irreducible = false;
          break;
        }
      }
      if (irreducible) irr.push_back(std::move(f));
    }
    // keep (deg, index) order; monic_of_degree already emits ascending
    std::stable_sort(irr.begin(), irr.end());
  }
  return irr;
}

uint64_t irreducible_count(uint32_t p, int d) {
  if (d < 1) throw std::domain_error("irreducible_count: degree >= 1");
  // (1/d) sum_{e | d} mu(e) p^(d/e)
  int64_t total = 0;
  for (int e = 1; e <= d; ++e) {
    if (d % e != 0) continue;
    int m = 1, n = e;
    for (int q = 2; q * q <= n; ++q)
      while (n % q == 0) {
        n /= q;
        if (n % q == 0) {
          m = 0;
          break;
        }
        m = -m;
      }
    if (n > 1) m = -m;
    if (m == 0) continue;
    uint64_t pw = 1;
    for (int i = 0; i < d / e; ++i) pw *= p;
    total += m * static_cast<int64_t>(pw);
  }
  return static_cast<uint64_t>(total / d);
}

Rational Rational::of(Poly num, Poly den) {
  uint32_t p = check_same_field(num, den);
  if (den.is_zero()) throw std::domain_error("rational with zero denominator");
  Poly g = gcd(num, den);
  if (g.deg() > 0) {
    num = divmod(num, g).quot;
    den = divmod(den, g).quot;
  }
  if (!den.monic()) {
    PrimeField f(p);
    uint32_t inv = f.inv(den.lead());
    num = scale(num, inv);
    den = scale(den, inv);
  }
  if (num.is_zero()) den = Poly::one(p);
  return Rational{std::move(num), std::move(den)};
}

Rational rat_add(const Rational& a, const Rational& b) {
  return Rational::of(add(mul(a.num, b.den), mul(b.num, a.den)),
                      mul(a.den, b.den));
}

Rational rat_neg(const Rational& a) { return Rational{neg(a.num), a.den}; }

Rational rat_mul_poly(const Rational& a, const Poly& m) {
  return Rational::of(mul(a.num, m), a.den);
}

Rational rat_fractional(const Rational& a) {
  if (a.num.deg() < a.den.deg()) return a;
  return Rational::of(poly_mod(a.num, a.den), a.den);
}

uint32_t laurent_residue(const Rational& alpha) {
  // With monic denominator B and R = A mod B, the Laurent expansion of R/B
  // starts at the T^{deg B - 1} coefficient of R.
  if (alpha.den.deg() == 0) return 0;  // a polynomial has no 1/T term
  Poly r = poly_mod(alpha.num, alpha.den);
  return r.coeff(alpha.den.deg() - 1);
}

std::complex<double> e_alpha(const Rational& alpha) {
  uint32_t p = alpha.den.p() ? alpha.den.p() : alpha.num.p();
  uint32_t r = laurent_residue(alpha);
  return std::polar(1.0, 2.0 * M_PI * static_cast<double>(r) /
                             static_cast<double>(p));
}

int64_t e_sum(const Rational& alpha, int h) {
  if (h < 0) throw std::domain_error("e_sum: negative interval degree");
  uint32_t p = alpha.den.p() ? alpha.den.p() : alpha.num.p();
  int64_t qh = 1;
  for (int i = 0; i < h; ++i) qh *= p;
  Rational f = rat_fractional(alpha);
  if (f.is_zero()) return qh;
  return (f.deg() < -h) ? qh : 0;
}

ESumBrute e_sum_bruteforce(const Rational& alpha, int h) {
  if (h < 0) throw std::domain_error("e_sum_bruteforce: negative degree");
  uint32_t p = alpha.den.p() ? alpha.den.p() : alpha.num.p();
  double qh = std::pow(static_cast<double>(p), h);
  if (qh > 1e6) throw BudgetError("e_sum_bruteforce: q^h exceeds 1e6");

  uint64_t count = static_cast<uint64_t>(qh);
  std::complex<double> total(0.0, 0.0);
  for (uint64_t idx = 0; idx < count; ++idx) {
    Poly m = Poly::from_index(p, idx);
    total += e_alpha(rat_mul_poly(alpha, m));
  }
  double guard = 1e-9 * std::max(1.0, qh);
  double rounded = std::round(total.real());
  if (std::abs(total.imag()) > guard || std::abs(total.real() - rounded) > guard)
    throw ConsistencyError("e_sum_bruteforce: sum is not integral");
  return {total, static_cast<int64_t>(rounded)};
}

Modulus Modulus::of(const Poly& Q) {
  if (!Q.monic() || Q.deg() < 1)
    throw std::domain_error("modulus must be monic of degree >= 1");
  Modulus m;
  m.Q = Q;
  Poly rest = Q;
  for (const Poly& P : irreducibles_up_to(Q.p(), Q.deg())) {
    if (P.deg() > rest.deg()) break;
    if (poly_mod(rest, P).is_zero()) {
      m.factors.push_back(P);
      rest = divmod(rest, P).quot;
      if (!poly_mod(rest, P).is_zero()) continue;
      throw std::domain_error("modulus is not squarefree: " + Q.str());
    }
  }
  if (rest.deg() != 0)
    throw std::domain_error("modulus factorization failed for " + Q.str());
  m.norm = ::sslab::ff::norm(Q);
  m.phi = 1;
  for (const Poly& P : m.factors) m.phi *= ::sslab::ff::norm(P) - 1;
  return m;
}

BigRational mk_ff(const Modulus& Q, int h, int k, int threads) {
  if (h < 0) throw std::domain_error("mk_ff: h must be >= 0");
  if (k < 1) throw std::domain_error("mk_ff: k must be >= 1");
  const uint32_t p = Q.Q.p();
  const int dq = Q.Q.deg();
  if (h >= dq) return BigRational(0);  // windows cover whole residue systems

  uint64_t qh = 1;
  for (int i = 0; i < h; ++i) qh *= p;
  if (Q.norm > 1000000000ull / std::max<uint64_t>(qh, 1))
    throw BudgetError("mk_ff: |Q| q^h budget 1e9 exceeded");

  // coprimality flags over the canonical residues deg < deg Q
  std::vector<uint8_t> coprime(Q.norm, 1);
  for (const Poly& P : Q.factors) {
    uint64_t mults = Q.norm / norm(P);
    for (uint64_t c = 0; c < mults; ++c) {
      Poly m = mul(Poly::from_index(p, c), P);
      coprime[m.to_index()] = 0;
    }
  }
  uint64_t phi = 0;
  for (uint8_t c : coprime) phi += c;
  if (phi != Q.phi)
    throw ConsistencyError("mk_ff: phi(Q) mismatch against the factorization");

  // e_F = |Q| count_F - q^h phi, an integer
  const int64_t center = static_cast<int64_t>(qh) * static_cast<int64_t>(phi);
  const uint64_t chunk = 4096;
  const uint64_t n_chunks = (Q.norm + chunk - 1) / chunk;
  std::vector<BigInt> partial(n_chunks, BigInt(0));
  parallel_blocks(n_chunks, threads, [&](uint64_t c) {
    uint64_t lo = c * chunk;
    uint64_t hi = std::min(Q.norm, lo + chunk);
    std::vector<uint32_t> fdig(static_cast<size_t>(dq), 0);
    {
      uint64_t rest = lo;
      for (int d = 0; d < dq; ++d) {
        fdig[static_cast<size_t>(d)] = static_cast<uint32_t>(rest % p);
        rest /= p;
      }
    }
    BigInt acc = 0;
    for (uint64_t fi = lo; fi < hi; ++fi) {
      uint64_t count = 0;
      for (uint64_t mi = 0; mi < qh; ++mi) {
        // digitwise sum: polynomial addition has no carries
        uint64_t rest = mi, idx = 0, base = 1;
        for (int d = 0; d < dq; ++d) {
          uint32_t md = static_cast<uint32_t>(rest % p);
          rest /= p;
          idx += base * ((fdig[static_cast<size_t>(d)] + md) % p);
          base *= p;
        }
        count += coprime[idx];
      }
      int64_t e = static_cast<int64_t>(Q.norm) * static_cast<int64_t>(count) -
                  center;
      BigInt t = e;
      for (int j = 1; j < k; ++j) t *= e;
      acc += t;
      // next residue: increment base-p digits
      for (int d = 0; d < dq; ++d) {
        if (++fdig[static_cast<size_t>(d)] < p) break;
        fdig[static_cast<size_t>(d)] = 0;
      }
    }
    partial[c] = std::move(acc);
  });
  BigInt total = 0;
  for (const BigInt& t : partial) total += t;
  return BigRational(total,
                     int_pow(BigInt(Q.norm), static_cast<unsigned>(k)));
}

BigRational vk_ff_bruteforce(const Modulus& Q, int h, int k) {
  if (h < 0) throw std::domain_error("vk_ff_bruteforce: h must be >= 0");
  if (k < 1) throw std::domain_error("vk_ff_bruteforce: k must be >= 1");
  const uint32_t p = Q.Q.p();
  const size_t nf = Q.factors.size();
  uint64_t qh = 1;
  for (int i = 0; i < h; ++i) qh *= p;

  struct Divisor {
    Poly R;
    int mobius;
    uint64_t phi;
    std::vector<Poly> live;  // coprime residues A with E(A/R) != 0
  };
  std::vector<Divisor> divs;
  for (uint32_t mask = 1; mask < (1u << nf); ++mask) {
    Divisor d;
    d.R = Poly::one(p);
    d.phi = 1;
    int bits = 0;
    for (size_t i = 0; i < nf; ++i)
      if (mask & (1u << i)) {
        d.R = mul(d.R, Q.factors[i]);
        d.phi *= norm(Q.factors[i]) - 1;
        ++bits;
      }
    d.mobius = (bits % 2 == 0) ? 1 : -1;
    // E(A/R) = q^h exactly when deg A < deg R - h (A coprime, so A != 0)
    int max_deg_a = d.R.deg() - h;
    if (max_deg_a > 0) {
      uint64_t limit = 1;
      for (int i = 0; i < max_deg_a; ++i) limit *= p;
      for (uint64_t ai = 1; ai < limit; ++ai) {
        Poly A = Poly::from_index(p, ai);
        if (gcd(A, d.R).deg() == 0) d.live.push_back(std::move(A));
      }
    }
    divs.push_back(std::move(d));
  }

  const BigInt qhk = int_pow(BigInt(qh), static_cast<unsigned>(k));
  BigRational vk = 0;
  uint64_t budget = 0;

  std::vector<size_t> tuple(static_cast<size_t>(k), 0);
  for (;;) {
    const Divisor& last = divs[tuple[static_cast<size_t>(k) - 1]];
    uint64_t valid = 0;

    bool any_empty = false;
    for (int i = 0; i + 1 < k; ++i)
      if (divs[tuple[static_cast<size_t>(i)]].live.empty()) any_empty = true;
    if (!any_empty && !(k >= 2 && last.live.empty())) {
      std::vector<size_t> a_idx(static_cast<size_t>(k) - 1, 0);
      bool done = (k == 1);
      while (!done) {
        Rational s = Rational::zero(p);
        for (int i = 0; i + 1 < k; ++i) {
          const Divisor& dd = divs[tuple[static_cast<size_t>(i)]];
          s = rat_add(s, Rational::of(dd.live[a_idx[static_cast<size_t>(i)]],
                                      dd.R));
        }
        if (++budget > 100000000ull)
          throw BudgetError("vk_ff_bruteforce: enumeration budget 1e8");
        // A_k/R_k = -s needs the reduced denominator to be exactly R_k
        Rational t = rat_neg(s);
        if (t.den == last.R && t.num.deg() < last.R.deg() - h) ++valid;

        int i = k - 2;
        while (i >= 0 &&
               ++a_idx[static_cast<size_t>(i)] ==
                   divs[tuple[static_cast<size_t>(i)]].live.size()) {
          a_idx[static_cast<size_t>(i)] = 0;
          --i;
        }
        if (i < 0) done = true;
      }
    }

    if (valid) {
      BigRational coeff = 1;
      for (int i = 0; i < k; ++i) {
        const Divisor& dd = divs[tuple[static_cast<size_t>(i)]];
        coeff *= BigRational(BigInt(dd.mobius), BigInt(dd.phi));
      }
      vk += coeff * BigRational(BigInt(valid) * qhk);
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

BigRational vk_to_mk_ff(const Modulus& Q, int k, const BigRational& vk) {
  BigRational phi_over_q(BigInt(Q.phi), BigInt(Q.norm));
  return BigRational(BigInt(Q.norm)) *
         rat_pow(phi_over_q, static_cast<unsigned>(k)) * vk;
}

FFProductCache::FFProductCache(uint32_t p, int truncation_deg, int k_max)
    : p_(p), dP_(truncation_deg), k_max_(k_max) {
  PrimeField f(p);  // validates p
  if (truncation_deg < 1)
    throw std::domain_error("FFProductCache: truncation degree >= 1");
  irr_ = irreducibles_up_to(p, truncation_deg);
  generic_.assign(static_cast<size_t>(k_max_) + 1, 1.0);
  for (int k = 2; k <= k_max_; ++k) {
    double g = 1.0;
    for (const Poly& P : irr_) {
      double np = static_cast<double>(norm(P));
      if (np <= k) continue;  // handled per tuple
      g *= std::pow(np / (np - 1.0), k) * ((np - k) / np);
    }
    generic_[static_cast<size_t>(k)] = g;
  }
}

double FFProductCache::generic_product(int k) const {
  if (k < 0 || k > k_max_)
    throw std::domain_error("FFProductCache: k outside [0, k_max]");
  return generic_[static_cast<size_t>(k)];
}

double FFProductCache::tail_bound(int k) const {
  double ck = GenericProductCache::tail_constant(k);
  double sum = 0.0;
  double qd = std::pow(static_cast<double>(p_), dP_ + 1);
  for (int d = dP_ + 1; d < dP_ + 200; ++d) {
    double term = 1.0 / (static_cast<double>(d) * qd);
    sum += term;
    if (term < 1e-300) break;
    qd *= static_cast<double>(p_);
  }
  return std::expm1(ck * sum);
}

namespace {

// nu_P: distinct residues of the tuple mod P.
unsigned nu_poly(const std::vector<Poly>& D, const Poly& P) {
  std::vector<uint64_t> seen;
  seen.reserve(D.size());
  for (const Poly& d : D) {
    uint64_t r = poly_mod(d, P).to_index();
    if (std::find(seen.begin(), seen.end(), r) == seen.end()) seen.push_back(r);
  }
  return static_cast<unsigned>(seen.size());
}

}  // namespace

SeriesValue ff_singular_series(const std::vector<Poly>& D,
                               const FFProductCache& cache) {
  const int k = static_cast<int>(D.size());
  const uint64_t trunc = static_cast<uint64_t>(cache.truncation_deg());
  if (k == 0) return {1.0, 0.0, trunc};
  const uint32_t p = cache.field();
  for (const Poly& d : D)
    if (d.p() != p) throw std::domain_error("tuple field mismatch");
  for (size_t i = 0; i < D.size(); ++i)
    for (size_t j = i + 1; j < D.size(); ++j)
      if (D[i] == D[j])
        throw std::domain_error("singular series tuple must be distinct");
  if (k == 1) return {1.0, 0.0, trunc};
  if (k > cache.k_max())
    throw std::domain_error("ff_singular_series: k exceeds cache k_max");

  // Irreducible factors of pairwise differences; cofactor past the cutoff
  // means the truncation cannot see a corrective factor.
  std::vector<const Poly*> special;
  for (size_t i = 0; i < D.size(); ++i)
    for (size_t j = i + 1; j < D.size(); ++j) {
      Poly diff = sub(D[j], D[i]);
      for (const Poly& P : cache.irreducibles()) {
        if (P.deg() > diff.deg()) break;
        if (poly_mod(diff, P).is_zero()) {
          special.push_back(&P);
          while (poly_mod(diff, P).is_zero()) diff = divmod(diff, P).quot;
        }
      }
      if (diff.deg() > 0)
        throw TruncationError(
            "difference has an irreducible factor beyond the cutoff degree");
    }
  std::sort(special.begin(), special.end());
  special.erase(std::unique(special.begin(), special.end()), special.end());

  double value = cache.generic_product(k);
  // |P| <= k irreducibles never reach nu = k distinct residues generically
  for (const Poly& P : cache.irreducibles()) {
    uint64_t np = norm(P);
    if (np > static_cast<uint64_t>(k)) break;
    unsigned nu = nu_poly(D, P);
    if (nu == np) return {0.0, 0.0, trunc};
    double npd = static_cast<double>(np);
    value *= std::pow(npd / (npd - 1.0), k) * ((npd - nu) / npd);
  }
  for (const Poly* P : special) {
    uint64_t np = norm(*P);
    if (np <= static_cast<uint64_t>(k)) continue;  // already handled
    unsigned nu = nu_poly(D, *P);
    value *= static_cast<double>(np - nu) / static_cast<double>(np - k);
  }
  return {value, cache.tail_bound(k), trunc};
}

SeriesValue ff_singular_series_zero(const std::vector<Poly>& D,
                                    const FFProductCache& cache) {
  const int k = static_cast<int>(D.size());
  if (k > 12) throw BudgetError("ff_singular_series_zero: k <= 12");
  CompensatedAccumulator acc;
  acc.add((k % 2 == 0) ? 1.0 : -1.0);  // empty subset
  double tail = 0.0;
  std::vector<Poly> subset;
  for (uint32_t mask = 1; mask < (1u << k); ++mask) {
    subset.clear();
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) subset.push_back(D[static_cast<size_t>(i)]);
    int sign = ((k - static_cast<int>(subset.size())) % 2 == 0) ? 1 : -1;
    SeriesValue s = ff_singular_series(subset, cache);
    acc.add(sign * s.value);
    tail += abs_tail(s);
  }
  SeriesValue out;
  out.value = acc.value();
  out.truncation = static_cast<uint64_t>(cache.truncation_deg());
  out.tail_bound = out.value == 0.0 ? tail : tail / std::abs(out.value);
  return out;
}

namespace {

// All proper fractions A/B with B monic of degree 1..max_den_deg, reduced,
// plus zero. Duplicates after reduction are removed.
std::vector<Rational> proper_fractions(uint32_t p, int max_den_deg) {
  std::vector<Rational> out;
  out.push_back(Rational::zero(p));
  for (int d = 1; d <= max_den_deg; ++d) {
    for (const Poly& B : monic_of_degree(p, d)) {
      uint64_t na = norm(B);
      for (uint64_t ai = 1; ai < na; ++ai) {
        Rational r = Rational::of(Poly::from_index(p, ai), B);
        if (r.den.deg() == d) out.push_back(std::move(r));  // new in lowest terms
      }
    }
  }
  return out;
}

std::vector<Poly> squarefree_monic_up_to(uint32_t p, int max_deg) {
  std::vector<Poly> out;
  for (int d = 1; d <= max_deg; ++d)
    for (Poly& f : monic_of_degree(p, d))
      if (is_squarefree(f)) out.push_back(std::move(f));
  return out;
}

int64_t ipow(int64_t b, int e) {
  int64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

std::string tuple_witness(const std::vector<Poly>& rs, uint32_t q, int h) {
  std::string w = "q=" + std::to_string(q) + " h=" + std::to_string(h) + " (";
  for (size_t i = 0; i < rs.size(); ++i) {
    if (i) w += ", ";
    w += rs[i].str();
  }
  return w + ")";
}

}  // namespace

SeriesValue rk_ff_bruteforce(int k, int h, const FFProductCache& cache) {
  if (k < 1 || k > 3) throw BudgetError("rk_ff_bruteforce: k <= 3");
  const uint32_t p = cache.field();
  uint64_t qh = 1;
  for (int i = 0; i < h; ++i) qh *= p;
  if (qh > 64) throw BudgetError("rk_ff_bruteforce: q^h <= 64");
  const uint64_t n = qh * p;  // polynomials of degree <= h, i.e. |D| <= q^h

  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;

  std::vector<Poly> polys;
  polys.reserve(n);
  for (uint64_t i = 0; i < n; ++i) polys.push_back(Poly::from_index(p, i));

  CompensatedAccumulator acc;
  double tail = 0.0;
  std::vector<size_t> idx(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<size_t>(i)] = static_cast<size_t>(i);
  std::vector<Poly> tuple(static_cast<size_t>(k));
  for (;;) {
    for (int i = 0; i < k; ++i) tuple[static_cast<size_t>(i)] = polys[idx[static_cast<size_t>(i)]];
    SeriesValue s0 = ff_singular_series_zero(tuple, cache);
    acc.add(s0.value);
    tail += abs_tail(s0);

    int i = k - 1;
    while (i >= 0 &&
           idx[static_cast<size_t>(i)] == n - static_cast<size_t>(k - 1 - i) - 1)
      --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j)
      idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }

  SeriesValue out;
  out.value = kfact * acc.value();
  out.truncation = static_cast<uint64_t>(cache.truncation_deg());
  double tail_abs = kfact * tail;
  out.tail_bound = out.value == 0.0 ? tail_abs : tail_abs / std::abs(out.value);
  return out;
}

LemmaBatteryReport lemma_battery(const LemmaBatteryOptions& opts) {
  LemmaBatteryReport report;

  LemmaReportEntry fast_vs_brute{"e-sum-fast-vs-brute", 0, 0, ""};
  LemmaReportEntry sum_sq{"sum-e-squared", 0, 0, ""};
  LemmaReportEntry sum_sq_shift{"sum-e-squared-shifted", 0, 0, ""};
  LemmaReportEntry cross{"cross-sum-dichotomy", 0, 0, ""};
  LemmaReportEntry fundamental{"fundamental-inequality", 0, 0, ""};
  LemmaReportEntry vanishing{"vanishing-small-modulus", 0, 0, ""};
  LemmaReportEntry five_tuple{"five-tuple-structure", 0, 0, ""};

  for (uint32_t q : opts.fields) {
    // --- fast path vs brute force, exhaustive over proper fractions ---
    for (int d = 1; d <= opts.max_deg; ++d) {
      for (const Poly& B : monic_of_degree(q, d)) {
        for (uint64_t ai = 0; ai < norm(B); ++ai) {
          Rational alpha = Rational::of(Poly::from_index(q, ai), B);
          for (int h = 1; h <= opts.max_h; ++h) {
            if (std::pow(double(q), h) > 1e6) continue;
            int64_t fast = e_sum(alpha, h);
            ESumBrute brute = e_sum_bruteforce(alpha, h);
            ++fast_vs_brute.instances;
            if (brute.witness != fast) {
              ++fast_vs_brute.violations;
              if (fast_vs_brute.witness.empty())
                fast_vs_brute.witness = "q=" + std::to_string(q) +
                                        " alpha=" + alpha.num.str() + "/" +
                                        alpha.den.str() +
                                        " h=" + std::to_string(h);
            }
          }
        }
      }
    }

    std::vector<Rational> shifts = proper_fractions(q, opts.shift_deg);
    std::vector<Rational> small_shifts = proper_fractions(q, 1);

    for (int d = 1; d <= opts.max_deg; ++d) {
      for (const Poly& R : monic_of_degree(q, d)) {
        uint64_t nr = norm(R);
        for (int h = 1; h <= opts.max_h; ++h) {
          int64_t qh = ipow(q, h);
          int64_t expected = std::max(qh * qh, static_cast<int64_t>(nr) * qh);

          // --- sum-e-squared, unshifted ---
          int64_t total = 0;
          for (uint64_t si = 0; si < nr; ++si) {
            int64_t e = e_sum(Rational::of(Poly::from_index(q, si), R), h);
            total += e * e;
          }
          ++sum_sq.instances;
          if (total != expected) {
            ++sum_sq.violations;
            if (sum_sq.witness.empty())
              sum_sq.witness =
                  "q=" + std::to_string(q) + " R=" + R.str() + " h=" +
                  std::to_string(h);
          }

          // --- shifted case split ---
          // For |alpha| < q^{-h} the sum is the unshifted maximum. Otherwise
          // the shifted sum is 0 or that same maximum, depending on whether
          // alpha lands within q^{-h} of some S/R: the nonzero terms form a
          // coset of the subgroup {S/R : |S/R| < q^{-h}}.
          for (const Rational& alpha : shifts) {
            int64_t tshift = 0;
            bool reachable = false;
            for (uint64_t si = 0; si < nr; ++si) {
              Rational sr = Rational::of(Poly::from_index(q, si), R);
              int64_t e = e_sum(rat_add(sr, alpha), h);
              if (e) reachable = true;
              tshift += e * e;
            }
            ++sum_sq_shift.instances;
            bool small = alpha.is_zero() || alpha.deg() < -h;
            int64_t want = (small || reachable) ? expected : 0;
            if (tshift != want) {
              ++sum_sq_shift.violations;
              if (sum_sq_shift.witness.empty())
                sum_sq_shift.witness = "q=" + std::to_string(q) +
                                       " R=" + R.str() + " h=" +
                                       std::to_string(h) + " alpha=" +
                                       alpha.num.str() + "/" + alpha.den.str();
            }
          }

          // --- cross-sum dichotomy (kept to smaller moduli) ---
          if (d <= 3) {
            for (const Rational& alpha : shifts) {
              for (const Rational& beta : small_shifts) {
                int64_t mixed = 0, ref = 0;
                for (uint64_t si = 0; si < nr; ++si) {
                  Rational sr = Rational::of(Poly::from_index(q, si), R);
                  int64_t ea = e_sum(rat_add(sr, alpha), h);
                  int64_t eb = e_sum(rat_add(sr, beta), h);
                  mixed += ea * eb;
                  ref += ea * ea;
                }
                Rational diff = rat_add(alpha, rat_neg(beta));
                bool close = diff.is_zero() || diff.deg() < -h;
                ++cross.instances;
                bool ok = close ? (mixed == ref) : (mixed == 0);
                if (!ok) {
                  ++cross.violations;
                  if (cross.witness.empty())
                    cross.witness = "q=" + std::to_string(q) + " R=" +
                                    R.str() + " h=" + std::to_string(h);
                }
              }
            }
          }
        }
      }
    }

    // --- vanishing of S(R_1..R_3) when some |R_i| <= q^h ---
    {
      std::vector<Poly> sf = squarefree_monic_up_to(q, 2);
      for (const Poly& r1 : sf)
        for (const Poly& r2 : sf)
          for (const Poly& r3 : sf)
            for (int h = 1; h <= opts.max_h; ++h) {
              int64_t qh = ipow(q, h);
              uint64_t minn = std::min({norm(r1), norm(r2), norm(r3)});
              if (static_cast<int64_t>(minn) > qh) continue;
              // S = sum over coprime A_i with sum A_i/R_i = 0 of prod E
              Poly big = mul(mul(r1, r2), r3);
              Poly m1 = divmod(big, r1).quot;
              Poly m2 = divmod(big, r2).quot;
              Poly m3 = divmod(big, r3).quot;
              int64_t s = 0;
              for (uint64_t a1 = 1; a1 < norm(r1); ++a1) {
                Poly A1 = Poly::from_index(q, a1);
                if (gcd(A1, r1).deg() != 0) continue;
                for (uint64_t a2 = 1; a2 < norm(r2); ++a2) {
                  Poly A2 = Poly::from_index(q, a2);
                  if (gcd(A2, r2).deg() != 0) continue;
                  // A_3 m_3 = -(A_1 m_1 + A_2 m_2) must divide out exactly
                  Poly n = neg(add(mul(A1, m1), mul(A2, m2)));
                  DivMod dm = divmod(n, m3);
                  if (!dm.rem.is_zero()) continue;
                  Poly A3 = dm.quot;
                  if (A3.is_zero() || A3.deg() >= r3.deg()) continue;
                  if (gcd(A3, r3).deg() != 0) continue;
                  s += e_sum(Rational::of(A1, r1), h) *
                       e_sum(Rational::of(A2, r2), h) *
                       e_sum(Rational::of(A3, r3), h);
                }
              }
              ++vanishing.instances;
              if (s != 0) {
                ++vanishing.violations;
                if (vanishing.witness.empty())
                  vanishing.witness = tuple_witness({r1, r2, r3}, q, h);
              }
            }
    }

    // --- structure of non-degenerate 5-tuples of divisors ---
    {
      std::vector<Poly> pool = irreducibles_up_to(q, q == 2 ? 2 : 1);
      if (pool.size() > 3) pool.resize(3);
      std::vector<Poly> divisors;
      for (uint32_t mask = 0; mask < (1u << pool.size()); ++mask) {
        Poly d = Poly::one(q);
        for (size_t i = 0; i < pool.size(); ++i)
          if (mask & (1u << i)) d = mul(d, pool[i]);
        divisors.push_back(std::move(d));
      }
      size_t nd = divisors.size();
      std::vector<size_t> t(5, 0);
      for (;;) {
        std::vector<Poly> R(5);
        for (int i = 0; i < 5; ++i) R[size_t(i)] = divisors[t[size_t(i)]];
        for (int h = 1; h <= 2; ++h) {
          int64_t qh = ipow(q, h);
          bool hyp = true;
          for (int i = 0; i < 5 && hyp; ++i)
            if (static_cast<int64_t>(norm(R[size_t(i)])) < qh) hyp = false;
          if (hyp) {  // no three equal
            for (int i = 0; i < 5 && hyp; ++i)
              for (int j = i + 1; j < 5 && hyp; ++j)
                for (int l = j + 1; l < 5 && hyp; ++l)
                  if (R[size_t(i)] == R[size_t(j)] &&
                      R[size_t(j)] == R[size_t(l)])
                    hyp = false;
          }
          if (hyp) {  // pairwise: equal, or large quotient and small gcd
            for (int i = 0; i < 5 && hyp; ++i)
              for (int j = 0; j < 5 && hyp; ++j) {
                if (i == j || R[size_t(i)] == R[size_t(j)]) continue;
                Poly g = gcd(R[size_t(i)], R[size_t(j)]);
                if (R[size_t(i)].deg() - g.deg() < h || 2 * g.deg() >= h)
                  hyp = false;
              }
          }
          if (hyp && (R[0] == R[1] || R[0] == R[2] || R[1] == R[2]))
            hyp = false;
          if (!hyp) continue;
          ++five_tuple.instances;
          Poly g12 = gcd(R[0], R[1]);
          Poly g3 = gcd(R[2], mul(R[0], R[1]));
          bool concl = (R[1].deg() - g12.deg() >= h) &&
                       (2 * (R[2].deg() - g3.deg()) >= h);
          if (!concl) {
            ++five_tuple.violations;
            if (five_tuple.witness.empty())
              five_tuple.witness = tuple_witness(R, q, h);
          }
        }
        int i = 4;
        while (i >= 0 && ++t[size_t(i)] == nd) {
          t[size_t(i)] = 0;
          --i;
        }
        if (i < 0) break;
      }
    }
  }

  // --- fundamental inequality on random instances ---
  {
    std::mt19937_64 rng(opts.seed);
    auto rand_int = [&](uint64_t lo, uint64_t hi) {  // inclusive
      return lo + rng() % (hi - lo + 1);
    };
    for (uint64_t draw = 0; draw < opts.fundamental_draws; ++draw) {
      uint32_t q = opts.fields[rng() % opts.fields.size()];
      int k = static_cast<int>(rand_int(2, 3));
      std::vector<Poly> pool_all = irreducibles_up_to(q, 2);
      int n_pool = static_cast<int>(rand_int(1, 2));
      std::vector<Poly> pool;
      while (static_cast<int>(pool.size()) < n_pool) {
        const Poly& cand = pool_all[rng() % pool_all.size()];
        if (std::find(pool.begin(), pool.end(), cand) == pool.end())
          pool.push_back(cand);
      }
      std::vector<Poly> R(static_cast<size_t>(k), Poly::one(q));
      for (const Poly& P : pool) {
        // each irreducible must divide at least two of the R_i
        std::vector<int> who;
        for (int i = 0; i < k; ++i) who.push_back(i);
        while (static_cast<int>(who.size()) > 2 && (rng() & 1))
          who.erase(who.begin() + static_cast<long>(rng() % who.size()));
        for (int i : who) R[size_t(i)] = mul(R[size_t(i)], P);
      }
      Poly big = Poly::one(q);
      for (const Poly& P : pool) big = mul(big, P);

      std::vector<std::vector<uint32_t>> G(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i) {
        G[size_t(i)].resize(norm(R[size_t(i)]));
        for (auto& g : G[size_t(i)]) g = static_cast<uint32_t>(rand_int(1, 8));
      }

      std::vector<Poly> M(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i) M[size_t(i)] = divmod(big, R[size_t(i)]).quot;

      // LHS = sum over residue tuples with zero total of prod G_i
      BigInt lhs = 0;
      std::vector<uint64_t> a(static_cast<size_t>(k - 1), 0);
      bool done = false;
      while (!done) {
        Poly n = Poly::zero(q);
        for (int i = 0; i + 1 < k; ++i)
          n = add(n, mul(Poly::from_index(q, a[size_t(i)]), M[size_t(i)]));
        n = neg(n);
        DivMod dm = divmod(n, M[size_t(k - 1)]);
        if (dm.rem.is_zero() && dm.quot.deg() < R[size_t(k - 1)].deg()) {
          uint64_t prod = G[size_t(k - 1)][dm.quot.to_index()];
          for (int i = 0; i + 1 < k; ++i) prod *= G[size_t(i)][a[size_t(i)]];
          lhs += prod;
        }
        int i = k - 2;
        while (i >= 0 && ++a[size_t(i)] == norm(R[size_t(i)])) {
          a[size_t(i)] = 0;
          --i;
        }
        if (i < 0) done = true;
      }

      // compare LHS^2 |R|^2 <= prod_i (|R_i| sum G_i^2), all exact
      BigInt rhs = 1;
      for (int i = 0; i < k; ++i) {
        BigInt sq = 0;
        for (uint32_t g : G[size_t(i)]) sq += BigInt(g) * g;
        rhs *= BigInt(norm(R[size_t(i)])) * sq;
      }
      BigInt lhs2 = lhs * lhs * BigInt(norm(big)) * BigInt(norm(big));
      ++fundamental.instances;
      if (lhs2 > rhs) {
        ++fundamental.violations;
        if (fundamental.witness.empty())
          fundamental.witness =
              "draw " + std::to_string(draw) + " " + tuple_witness(R, q, 0);
      }
    }
  }

  report.entries = {fast_vs_brute, sum_sq,      sum_sq_shift, cross,
                    fundamental,   vanishing,   five_tuple};
  return report;
}

}  // namespace sslab::ff
