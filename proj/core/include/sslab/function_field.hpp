#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sslab/errors.hpp"
#include "sslab/rational.hpp"
#include "sslab/singular_series.hpp"

namespace sslab::ff {

// Prime field F_p, p <= 61. For prime p the additive character is
// e_p(c) = exp(2 pi i c / p) directly; extension fields would need the
// Frobenius trace and are a documented extension point, not built here.
struct PrimeField {
  uint32_t p;

  explicit PrimeField(uint32_t p_);

  uint32_t add(uint32_t a, uint32_t b) const { return (a + b) % p; }
  uint32_t sub(uint32_t a, uint32_t b) const { return (a + p - b) % p; }
  uint32_t mul(uint32_t a, uint32_t b) const {
    return static_cast<uint32_t>((uint64_t(a) * b) % p);
  }
  uint32_t neg(uint32_t a) const { return a == 0 ? 0 : p - a; }
  uint32_t inv(uint32_t a) const;
};

// Dense polynomial over F_p: coefficients ascending, no trailing zeros, so
// the representation is canonical. deg(0) is a -infinity sentinel.
class Poly {
 public:
  static constexpr int kNegInfDeg = std::numeric_limits<int>::min();

  Poly() = default;  // zero over an unspecified field (p() == 0)
  Poly(uint32_t p, std::vector<uint32_t> coeffs);

  static Poly zero(uint32_t p) { return Poly(p, {}); }
  static Poly one(uint32_t p) { return Poly(p, {1}); }
  static Poly constant(uint32_t p, uint32_t c) { return Poly(p, {c}); }
  static Poly x(uint32_t p) { return Poly(p, {0, 1}); }

  // Base-p digits are the coefficients, so index order is the canonical
  // enumeration order.
  static Poly from_index(uint32_t p, uint64_t index);
  uint64_t to_index() const;

  uint32_t p() const { return p_; }
  int deg() const {
    return c_.empty() ? kNegInfDeg : static_cast<int>(c_.size()) - 1;
  }
  bool is_zero() const { return c_.empty(); }
  bool is_one() const { return c_.size() == 1 && c_[0] == 1; }
  bool monic() const { return !c_.empty() && c_.back() == 1; }
  uint32_t coeff(int i) const {
    return (i >= 0 && i < static_cast<int>(c_.size())) ? c_[size_t(i)] : 0;
  }
  uint32_t lead() const { return c_.empty() ? 0 : c_.back(); }
  const std::vector<uint32_t>& coeffs() const { return c_; }

  std::string str() const;

  friend bool operator==(const Poly& a, const Poly& b) {
    return a.p_ == b.p_ && a.c_ == b.c_;
  }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }
  // (deg, index) order, for sorted containers
  friend bool operator<(const Poly& a, const Poly& b) {
    if (a.c_.size() != b.c_.size()) return a.c_.size() < b.c_.size();
    for (size_t i = a.c_.size(); i-- > 0;)
      if (a.c_[i] != b.c_[i]) return a.c_[i] < b.c_[i];
    return false;
  }

 private:
  uint32_t p_ = 0;
  std::vector<uint32_t> c_;
};

Poly add(const Poly& a, const Poly& b);
Poly sub(const Poly& a, const Poly& b);
Poly mul(const Poly& a, const Poly& b);
Poly neg(const Poly& a);
Poly scale(const Poly& a, uint32_t c);

struct DivMod {
  Poly quot, rem;
};
// A = quot*B + rem with deg rem < deg B. Throws on division by zero.
DivMod divmod(const Poly& a, const Poly& b);
Poly poly_mod(const Poly& a, const Poly& b);

// Monic gcd; gcd(0, 0) = 0.
Poly gcd(Poly a, Poly b);
Poly derivative(const Poly& a);
uint32_t eval(const Poly& a, uint32_t x);
Poly make_monic(const Poly& a);
bool is_squarefree(const Poly& a);

uint64_t norm(const Poly& a);  // q^deg, 0 for the zero polynomial

// All monic polynomials of the given degree, enumeration order.
std::vector<Poly> monic_of_degree(uint32_t p, int d);

// Monic irreducibles of degree 1..max_deg, ascending in (deg, index).
// Guard: max_deg <= 12 and p^max_deg within an enumeration budget.
std::vector<Poly> irreducibles_up_to(uint32_t p, int max_deg);

// Count of monic irreducibles of a given degree (necklace formula); used as
// an independent check on the enumeration.
uint64_t irreducible_count(uint32_t p, int d);

// Reduced fraction of polynomials; den monic and nonzero.
struct Rational {
  Poly num, den;

  static Rational of(Poly num, Poly den);
  static Rational zero(uint32_t p) {
    return Rational{Poly::zero(p), Poly::one(p)};
  }
  int deg() const {
    return num.is_zero() ? Poly::kNegInfDeg : num.deg() - den.deg();
  }
  bool is_zero() const { return num.is_zero(); }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
};

Rational rat_add(const Rational& a, const Rational& b);
Rational rat_neg(const Rational& a);
Rational rat_mul_poly(const Rational& a, const Poly& m);
// Fractional part: subtract the polynomial part, leaving deg < 0.
Rational rat_fractional(const Rational& a);

// Coefficient of 1/T in the Laurent expansion at infinity.
uint32_t laurent_residue(const Rational& alpha);

// e(alpha) = exp(2 pi i res(alpha) / p).
std::complex<double> e_alpha(const Rational& alpha);

// E(alpha) = sum over deg M < h of e(M alpha). After taking the fractional
// part f, E = q^h when f = 0 or deg f < -h, and 0 when -h <= deg f <= -1:
// the residue map M -> res(M f) is then a surjective linear form, so the
// character sum is balanced. Always an exact integer.
int64_t e_sum(const Rational& alpha, int h);

struct ESumBrute {
  std::complex<double> value;
  int64_t witness;  // nearest integer, guarded
};
// Direct q^h-term evaluation; q^h <= 1e6. ConsistencyError if the sum is not
// integral to within 1e-9 * q^h.
ESumBrute e_sum_bruteforce(const Rational& alpha, int h);

// Monic squarefree modulus with its irreducible factorization.
struct Modulus {
  Poly Q;
  std::vector<Poly> factors;
  uint64_t norm = 0;  // |Q| = q^deg Q
  uint64_t phi = 0;   // prod (|P| - 1)

  static Modulus of(const Poly& Q);
};

// Exact k-th centered moment of reduced-residue counts in intervals
// I(F, h) = F + {deg < h}: sum over residues F mod Q of
// (count - q^h phi/|Q|)^k. Budget |Q| q^h <= 1e9. Residue ranges are
// scanned in parallel and merged exactly.
BigRational mk_ff(const Modulus& Q, int h, int k, int threads = 1);

// Exact V_k(Q;h): divisor tuples R_i | Q with |R_i| > 1, coprime numerators
// with integral total, E values from the exact fast path. Budget 1e8 terms.
BigRational vk_ff_bruteforce(const Modulus& Q, int h, int k);

// m_k = |Q| (phi/|Q|)^k V_k.
BigRational vk_to_mk_ff(const Modulus& Q, int k, const BigRational& vk);

// Truncated products over monic irreducibles of degree <= truncation_deg,
// split into a generic part (all k <= 8 by default) and per-tuple
// corrections, mirroring the integer cache.
class FFProductCache {
 public:
  FFProductCache(uint32_t p, int truncation_deg, int k_max = 8);

  uint32_t field() const { return p_; }
  int truncation_deg() const { return dP_; }
  int k_max() const { return k_max_; }
  const std::vector<Poly>& irreducibles() const { return irr_; }
  double generic_product(int k) const;
  // exp(c_k sum_{d > dP} q^-d / d) - 1 with c_k = k(k-1)/2 + k^2; the count
  // of irreducibles of degree d is at most q^d / d.
  double tail_bound(int k) const;

 private:
  uint32_t p_;
  int dP_;
  int k_max_;
  std::vector<Poly> irr_;
  std::vector<double> generic_;
};

// Singular series of a tuple of distinct polynomials, truncated at the cache
// degree. TruncationError if a pairwise difference has an irreducible factor
// beyond the cutoff.
SeriesValue ff_singular_series(const std::vector<Poly>& D,
                               const FFProductCache& cache);
SeriesValue ff_singular_series_zero(const std::vector<Poly>& D,
                                    const FFProductCache& cache);

// R_k(q^h) = k! * sum over k-subsets of {deg <= h} of the centered singular
// series. Guards: k <= 3 and q^h <= 64.
SeriesValue rk_ff_bruteforce(int k, int h, const FFProductCache& cache);

struct LemmaReportEntry {
  std::string name;
  uint64_t instances = 0;
  uint64_t violations = 0;
  std::string witness;  // first violating instance, when any
};

struct LemmaBatteryReport {
  std::vector<LemmaReportEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (e.violations) return false;
    return true;
  }
};

struct LemmaBatteryOptions {
  std::vector<uint32_t> fields = {2, 3};
  int max_deg = 4;       // moduli R up to this degree
  int shift_deg = 2;     // shift denominators up to this degree
  int max_h = 3;
  uint64_t fundamental_draws = 1000;
  uint64_t seed = 0x5eedULL;
};

// Exhaustive and randomized checks of the exponential-sum lemmas:
//   e-sum-fast-vs-brute      fast path == brute force on the full grid
//   sum-e-squared            sum_S E(S/R)^2 = max(q^{2h}, |R| q^h)
//   sum-e-squared-shifted    the shifted case split, exact / upper bound
//   cross-sum-dichotomy      zero or collapse of the mixed sum
//   fundamental-inequality   the convolution bound with constant 1
//   vanishing-small-modulus  S(R_1..R_k) = 0 once some |R_i| <= q^h
//   five-tuple-structure     divisor bounds for non-degenerate 5-tuples
LemmaBatteryReport lemma_battery(const LemmaBatteryOptions& opts = {});

}  // namespace sslab::ff
