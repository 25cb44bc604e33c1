#include "sslab/rk_sums.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sslab/parallel.hpp"

namespace sslab {

namespace {

double binomial(uint64_t n, int k) {
  double b = 1.0;
  for (int i = 0; i < k; ++i)
    b *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  return b;
}

// Distinct prime factors > 3 for every n < size, CSR layout. The factor 2
// and 3 cases are handled inline by the callers.
struct SmallFactorLists {
  std::vector<uint32_t> offset;  // size + 1 entries
  std::vector<uint32_t> pool;    // primes, ascending within each n

  explicit SmallFactorLists(uint64_t size, const PrimeTable& table) {
    offset.assign(size + 1, 0);
    std::vector<uint32_t> scratch;
    for (uint64_t n = 1; n < size; ++n) {
      uint64_t m = n;
      while (m % 2 == 0) m /= 2;
      while (m % 3 == 0) m /= 3;
      while (m > 1) {
        uint32_t p = table.spf(m);
        pool.push_back(p);
        while (m % p == 0) m /= p;
      }
      offset[n + 1] = static_cast<uint32_t>(pool.size());
    }
  }

  const uint32_t* begin(uint64_t n) const { return pool.data() + offset[n]; }
  const uint32_t* end(uint64_t n) const { return pool.data() + offset[n + 1]; }
};

// S({0,g}) for 1 <= g < size. Zero for odd g; for even g the p = 2 factor is
// 2 and every prime p > 2 dividing g contributes (p-1)/(p-2).
std::vector<double> pair_series_values(uint64_t size,
                                       const GenericProductCache& cache,
                                       int threads) {
  const double g2 = cache.generic_product(2);
  std::vector<double> sval(size, 0.0);
  const uint64_t chunk = 4096;
  const uint64_t n_chunks = (size + chunk - 1) / chunk;
  parallel_blocks(n_chunks, threads, [&](uint64_t c) {
    uint64_t lo = std::max<uint64_t>(1, c * chunk);
    uint64_t hi = std::min(size, (c + 1) * chunk);
    for (uint64_t g = lo; g < hi; ++g) {
      if (g % 2 != 0) continue;
      double v = 2.0 * g2;
      uint64_t m = g;
      while (m % 2 == 0) m /= 2;
      while (m > 1) {
        uint64_t p = cache.table().spf(m);
        v *= static_cast<double>(p - 1) / static_cast<double>(p - 2);
        while (m % p == 0) m /= p;
      }
      sval[g] = v;
    }
  });
  return sval;
}

}  // namespace

SeriesValue rk_bruteforce(int k, uint64_t h, const GenericProductCache& cache) {
  if (k < 1) throw std::domain_error("rk_bruteforce: k must be >= 1");
  const uint64_t P = cache.truncation();
  if (h < static_cast<uint64_t>(k)) return {0.0, 0.0, P};
  if (k == 3 && h > 80)
    throw BudgetError("rk_bruteforce: h <= 80 enforced for k = 3");
  if (k == 5 && h > 40)
    throw BudgetError("rk_bruteforce: h <= 40 enforced for k = 5");
  if (binomial(h, k) * std::pow(2.0, k) > 2.2e7)
    throw BudgetError("rk_bruteforce: binom(h,k)*2^k evaluation budget");

  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;

  CompensatedAccumulator acc;
  double tail = 0.0;
  std::vector<int64_t> subset(k);
  for (int i = 0; i < k; ++i) subset[i] = i + 1;
  for (;;) {
    SeriesValue s0 = singular_series_zero(OffsetTuple(subset), cache);
    acc.add(s0.value);
    tail += abs_tail(s0);
    // next combination, lexicographic
    int i = k - 1;
    while (i >= 0 && subset[i] == static_cast<int64_t>(h) - (k - 1 - i)) --i;
    if (i < 0) break;
    ++subset[i];
    for (int j = i + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }

  SeriesValue out;
  out.value = kfact * acc.value();
  out.tail_bound = 0.0;
  out.truncation = P;
  double tail_abs = kfact * tail;
  out.tail_bound =
      out.value == 0.0 ? tail_abs : tail_abs / std::abs(out.value);
  return out;
}

RkSeries r2_exact_series(uint64_t h_max, const GenericProductCache& cache,
                         int threads, uint64_t h_budget) {
  if (h_max < 1) throw std::domain_error("r2_exact_series: h_max >= 1");
  if (h_max > h_budget)
    throw BudgetError("r2_exact_series: h_max " + std::to_string(h_max) +
                      " exceeds budget " + std::to_string(h_budget));
  if (cache.truncation() < h_max)
    throw TruncationError("r2_exact_series: cache truncation below h_max");

  std::vector<double> sval = pair_series_values(h_max, cache, threads);
  const double tb2 = cache.tail_bound(2);

  RkSeries series;
  series.k = 2;
  series.h_max = h_max;
  series.truncation = cache.truncation();
  series.over_k_factorial = false;
  series.values.assign(h_max + 1, 0.0);
  series.tail_abs.assign(h_max + 1, 0.0);

  // R_2(h) = 2 [ h * sum_{g<h} s0(g) - sum_{g<h} g s0(g) ], s0 = S - 1.
  CompensatedAccumulator sum0, sum1, mass0, mass1;
  for (uint64_t h = 1; h <= h_max; ++h) {
    if (h >= 2) {
      uint64_t g = h - 1;
      double s0 = sval[g] - 1.0;
      sum0.add(s0);
      sum1.add(static_cast<double>(g) * s0);
      mass0.add(sval[g]);
      mass1.add(static_cast<double>(g) * sval[g]);
    }
    double hd = static_cast<double>(h);
    series.values[h] = 2.0 * (hd * sum0.value() - sum1.value());
    series.tail_abs[h] = 2.0 * tb2 * (hd * mass0.value() - mass1.value());
  }
  return series;
}

RkSeries r3_series_fast(uint64_t h_max, const GenericProductCache& cache,
                        int threads, uint64_t h_budget) {
  if (h_max < 1) throw std::domain_error("r3_series_fast: h_max >= 1");
  if (h_max > h_budget)
    throw BudgetError("r3_series_fast: h_max " + std::to_string(h_max) +
                      " exceeds budget " + std::to_string(h_budget));
  if (cache.truncation() < h_max)
    throw TruncationError("r3_series_fast: cache truncation below h_max");
  if (cache.k_max() < 3)
    throw std::domain_error("r3_series_fast: cache k_max must be >= 3");

  const PrimeTable& table = cache.table();
  const double g3 = cache.generic_product(3);
  const double tb2 = cache.tail_bound(2);
  const double tb3 = cache.tail_bound(3);

  std::vector<double> sval2 = pair_series_values(h_max, cache, threads);
  SmallFactorLists lists(h_max, table);

  // Ratios (p - nu)/(p - 3) for the two reachable nu at p > 3. A prime > 3
  // divides either exactly one of {a, b, b-a} (nu = 2) or all three (nu = 1).
  std::vector<double> ratio_nu2(h_max, 0.0), ratio_nu1(h_max, 0.0);
  for (uint32_t p : table.primes()) {
    if (p <= 3) continue;
    if (p >= h_max) break;
    ratio_nu2[p] = static_cast<double>(p - 2) / static_cast<double>(p - 3);
    ratio_nu1[p] = static_cast<double>(p - 1) / static_cast<double>(p - 3);
  }

  // Prefix sums of S({0,g}) for the closed-form pair corrections.
  std::vector<double> pref2(h_max, 0.0);
  {
    CompensatedAccumulator acc;
    for (uint64_t g = 1; g < h_max; ++g) {
      acc.add(sval2[g]);
      pref2[g] = acc.value();
    }
  }

  // Per-b accumulation of C0(b) = sum_{0<a<b} S0({0,a,b}). The triple S
  // vanishes unless a, b are both even and {0,a,b} misses a class mod 3, so
  // the inner loop only evaluates those tuples; the pair and constant parts
  // of S0 collapse to prefix sums.
  std::vector<double> c0(h_max, 0.0);       // sum of S0 over a
  std::vector<double> c3(h_max, 0.0);       // sum of triple S over a
  std::vector<double> pairmass(h_max, 0.0); // sum of pair S mass over a

  const uint64_t block = 64;
  const uint64_t n_blocks = (h_max + block - 1) / block;
  parallel_blocks(n_blocks, threads, [&](uint64_t blk) {
    uint64_t b_lo = std::max<uint64_t>(2, blk * block);
    uint64_t b_hi = std::min(h_max, (blk + 1) * block);
    for (uint64_t b = b_lo; b < b_hi; ++b) {
      CompensatedAccumulator triple;
      if (b % 2 == 0) {
        const uint32_t* bp = lists.begin(b);
        const uint32_t* be = lists.end(b);
        bool b_div3 = (b % 3 == 0);
        for (uint64_t a = 2; a < b; a += 2) {
          uint64_t d = b - a;
          int t3 = (a % 3 == 0) + b_div3 + (d % 3 == 0);
          if (t3 == 0) continue;  // nu_3 = 3, factor vanishes
          double v = 4.0 * (t3 == 3 ? 2.25 : 1.125) * g3;
          const uint32_t* ap = lists.begin(a);
          const uint32_t* ae = lists.end(a);
          const uint32_t* dp = lists.begin(d);
          const uint32_t* de = lists.end(d);
          // three-way merge; multiplicity 3 means p | a and p | b (nu = 1)
          while (ap != ae || bp != be || dp != de) {
            uint32_t pa = ap != ae ? *ap : UINT32_MAX;
            uint32_t pb = bp != be ? *bp : UINT32_MAX;
            uint32_t pd = dp != de ? *dp : UINT32_MAX;
            uint32_t p = std::min({pa, pb, pd});
            int mult = 0;
            if (pa == p) {
              ++ap;
              ++mult;
            }
            if (pb == p) {
              ++bp;
              ++mult;
            }
            if (pd == p) {
              ++dp;
              ++mult;
            }
            v *= (mult == 1) ? ratio_nu2[p] : ratio_nu1[p];
          }
          bp = lists.begin(b);  // rewind for the next a
          triple.add(v);
        }
      }
      double s3 = triple.value();
      double mass = static_cast<double>(b - 1) * sval2[b] + 2.0 * pref2[b - 1];
      c3[b] = s3;
      pairmass[b] = mass;
      c0[b] = s3 - mass + 2.0 * static_cast<double>(b - 1);
    }
  });

  RkSeries series;
  series.k = 3;
  series.h_max = h_max;
  series.truncation = cache.truncation();
  series.over_k_factorial = true;
  series.values.assign(h_max + 1, 0.0);
  series.tail_abs.assign(h_max + 1, 0.0);

  // R_3(h)/6 = h * sum_{b<h} C0(b) - sum_{b<h} b C0(b).
  CompensatedAccumulator s0, s1, t30, t31, pm0, pm1;
  for (uint64_t h = 1; h <= h_max; ++h) {
    if (h >= 2) {
      uint64_t b = h - 1;
      double bd = static_cast<double>(b);
      s0.add(c0[b]);
      s1.add(bd * c0[b]);
      t30.add(c3[b]);
      t31.add(bd * c3[b]);
      pm0.add(pairmass[b]);
      pm1.add(bd * pairmass[b]);
    }
    double hd = static_cast<double>(h);
    series.values[h] = hd * s0.value() - s1.value();
    series.tail_abs[h] = tb3 * (hd * t30.value() - t31.value()) +
                         tb2 * (hd * pm0.value() - pm1.value());
  }
  return series;
}

GrowthFit fit_growth_law(const std::vector<double>& values, uint64_t h_min,
                         uint64_t h_max) {
  if (h_min < 3) throw std::domain_error("fit_growth_law: h_min must be >= 3");
  if (h_max >= values.size() || h_min > h_max)
    throw std::domain_error("fit_growth_law: empty or out-of-range window");

  CompensatedAccumulator xy, xx;
  for (uint64_t h = h_min; h <= h_max; ++h) {
    double lg = std::log(static_cast<double>(h));
    double x = static_cast<double>(h) * lg * lg;
    xy.add(x * values[h]);
    xx.add(x * x);
  }
  GrowthFit fit;
  fit.A = xy.value() / xx.value();
  CompensatedAccumulator rss;
  for (uint64_t h = h_min; h <= h_max; ++h) {
    double lg = std::log(static_cast<double>(h));
    double x = static_cast<double>(h) * lg * lg;
    double r = values[h] - fit.A * x;
    rss.add(r * r);
  }
  fit.rss = rss.value();
  return fit;
}

GrowthFit fit_growth_law(const RkSeries& series, uint64_t h_min,
                         uint64_t h_max) {
  return fit_growth_law(series.values, h_min, h_max);
}

LeadingFit fit_growth_law_leading(const std::vector<double>& values,
                                  uint64_t h_min, uint64_t h_max) {
  if (h_min < 3)
    throw std::domain_error("fit_growth_law_leading: h_min must be >= 3");
  if (h_max >= values.size() || h_min > h_max)
    throw std::domain_error("fit_growth_law_leading: empty window");

  CompensatedAccumulator m00, m01, m11, r0, r1;
  for (uint64_t h = h_min; h <= h_max; ++h) {
    double lg = std::log(static_cast<double>(h));
    double x0 = static_cast<double>(h) * lg * lg;
    double x1 = static_cast<double>(h) * lg;
    m00.add(x0 * x0);
    m01.add(x0 * x1);
    m11.add(x1 * x1);
    r0.add(x0 * values[h]);
    r1.add(x1 * values[h]);
  }
  double det = m00.value() * m11.value() - m01.value() * m01.value();
  if (det == 0.0)
    throw std::domain_error("fit_growth_law_leading: singular normal matrix");
  LeadingFit fit;
  fit.A = (r0.value() * m11.value() - r1.value() * m01.value()) / det;
  fit.B = (m00.value() * r1.value() - m01.value() * r0.value()) / det;
  CompensatedAccumulator rss;
  for (uint64_t h = h_min; h <= h_max; ++h) {
    double lg = std::log(static_cast<double>(h));
    double r = values[h] - fit.A * static_cast<double>(h) * lg * lg -
               fit.B * static_cast<double>(h) * lg;
    rss.add(r * r);
  }
  fit.rss = rss.value();
  return fit;
}

LeadingFit fit_growth_law_leading(const RkSeries& series, uint64_t h_min,
                                  uint64_t h_max) {
  return fit_growth_law_leading(series.values, h_min, h_max);
}

std::vector<double> residual_series(const RkSeries& series, double A) {
  if (!std::isfinite(A))
    throw std::domain_error("residual_series: A must be finite");
  std::vector<double> resid(series.values.size(), 0.0);
  for (uint64_t h = 1; h < series.values.size(); ++h) {
    double lg = std::log(static_cast<double>(h));
    resid[h] = series.values[h] - A * static_cast<double>(h) * lg * lg;
  }
  return resid;
}

namespace {

std::vector<int64_t> constraint_values(const CoordinateConstraint& c) {
  if (c.hi < c.lo)
    throw std::domain_error("rk_restricted: empty coordinate window");
  if (c.modulus < 1)
    throw std::domain_error("rk_restricted: modulus must be >= 1");
  std::vector<int64_t> vals;
  int64_t m = c.modulus;
  int64_t start = c.lo + ((c.residue - c.lo) % m + m) % m;
  for (int64_t x = start; x <= c.hi; x += m) vals.push_back(x);
  return vals;
}

double constraint_weight(const CoordinateConstraint& c, int64_t x) {
  if (c.weight == CoordinateConstraint::Weight::sharp) return 1.0;
  double mid = 0.5 * static_cast<double>(c.lo + c.hi);
  double radius = 0.5 * static_cast<double>(c.hi - c.lo);
  if (radius == 0.0) return 1.0;
  return 1.0 - std::abs(static_cast<double>(x) - mid) / radius;
}

}  // namespace

SeriesValue rk_restricted(const RestrictionSpec& spec,
                          const GenericProductCache& cache) {
  const int k = static_cast<int>(spec.coords.size());
  if (k < 1) throw std::domain_error("rk_restricted: k must be >= 1");

  std::vector<std::vector<int64_t>> values;
  double lattice = 1.0;
  for (const auto& c : spec.coords) {
    values.push_back(constraint_values(c));
    lattice *= static_cast<double>(values.back().size());
  }
  if (lattice > 1e8)
    throw BudgetError("rk_restricted: lattice exceeds 1e8 points");

  CompensatedAccumulator acc;
  double tail = 0.0;
  std::vector<size_t> idx(k, 0);
  std::vector<int64_t> tuple(k);
  bool done = false;
  for (const auto& v : values)
    if (v.empty()) done = true;

  while (!done) {
    for (int i = 0; i < k; ++i) tuple[i] = values[i][idx[i]];
    bool distinct = true;
    for (int i = 0; i < k && distinct; ++i)
      for (int j = i + 1; j < k; ++j)
        if (tuple[i] == tuple[j]) {
          distinct = false;
          break;
        }
    if (distinct) {
      double w = 1.0;
      for (int i = 0; i < k; ++i) w *= constraint_weight(spec.coords[i], tuple[i]);
      if (w != 0.0) {
        SeriesValue s0 = singular_series_zero(OffsetTuple(tuple), cache);
        acc.add(w * s0.value);
        tail += std::abs(w) * abs_tail(s0);
      }
    }
    int i = k - 1;
    while (i >= 0 && ++idx[i] == values[i].size()) {
      idx[i] = 0;
      --i;
    }
    if (i < 0) done = true;
  }

  SeriesValue out;
  out.value = acc.value();
  out.truncation = cache.truncation();
  out.tail_bound = out.value == 0.0 ? tail : tail / std::abs(out.value);
  return out;
}

FractionCount fraction_tuple_count(int k, uint64_t q_lo, uint64_t q_hi,
                                   const BigRational& delta) {
  if (k < 1) throw std::domain_error("fraction_tuple_count: k must be >= 1");
  if (q_lo < 1 || q_hi < q_lo)
    throw std::domain_error("fraction_tuple_count: bad modulus range");
  if (delta <= 0) throw std::domain_error("fraction_tuple_count: delta <= 0");

  double dd = to_double(delta);
  double per_level = static_cast<double>(q_hi - q_lo + 1) *
                     (2.0 * dd * static_cast<double>(q_hi) + 1.0);
  if (std::pow(per_level, k) > 1e9)
    throw BudgetError("fraction_tuple_count: enumeration budget exceeded");

  const BigInt dnum = numerator(delta);
  const BigInt dden = denominator(delta);

  // ||a/q|| <= delta  <=>  min(a, q-a) * dden <= dnum * q
  auto norm_ok = [&](uint64_t a, uint64_t q) {
    BigInt m = std::min<uint64_t>(a, q - a);
    return m * dden <= dnum * BigInt(q);
  };
  // floor(delta * q)
  auto fdq = [&](uint64_t q) -> uint64_t {
    BigInt f = (dnum * q) / dden;
    if (f > q) return q;
    return f.convert_to<uint64_t>();
  };

  uint64_t count = 0;
  std::vector<uint64_t> qs(k), as(k);

  // Enumerates a_i for levels 0..k-2; the last numerator is forced by the
  // integrality of the total, then norm-checked.
  auto recurse = [&](auto&& self, int level, const BigRational& partial) -> void {
    if (level == k - 1) {
      for (uint64_t q = q_lo; q <= q_hi; ++q) {
        BigRational x = -partial;
        BigInt fl = numerator(x) / denominator(x);
        if (x < 0 && denominator(x) != 1 &&
            fl * denominator(x) != numerator(x))
          fl -= 1;
        x -= BigRational(fl);  // fractional part in [0,1)
        BigInt d = denominator(x);
        if (d > q || BigInt(q) % d != 0) continue;
        BigInt ak = numerator(x) * (BigInt(q) / d);
        uint64_t a = ak.convert_to<uint64_t>();
        if (norm_ok(a, q)) ++count;
      }
      return;
    }
    for (uint64_t q = q_lo; q <= q_hi; ++q) {
      uint64_t f = fdq(q);
      auto visit = [&](uint64_t a) {
        self(self, level + 1, partial + BigRational(BigInt(a), BigInt(q)));
      };
      if (q <= 2 * f + 1) {
        for (uint64_t a = 0; a < q; ++a) visit(a);
      } else {
        for (uint64_t a = 0; a <= f; ++a) visit(a);
        for (uint64_t a = q - f; a < q; ++a) visit(a);
      }
    }
  };
  recurse(recurse, 0, BigRational(0));

  FractionCount out;
  out.count = count;
  int exponent = (k % 2 == 0) ? k / 2 : (k + 1) / 2;
  out.envelope = std::pow(static_cast<double>(q_lo), k) * std::pow(dd, exponent);
  return out;
}

}  // namespace sslab
