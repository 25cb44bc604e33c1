#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace sslab {

// Exact arithmetic for the identity batteries. cpp_rational keeps the fraction
// gcd-reduced with a positive denominator, which is exactly the canonical form
// the identity checks rely on.
using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

inline double to_double(const BigRational& x) { return x.convert_to<double>(); }

inline BigInt numerator(const BigRational& x) {
  return boost::multiprecision::numerator(x);
}
inline BigInt denominator(const BigRational& x) {
  return boost::multiprecision::denominator(x);
}

inline BigInt int_pow(const BigInt& base, unsigned exp) {
  return boost::multiprecision::pow(base, exp);
}

inline BigRational rat_pow(const BigRational& base, unsigned exp) {
  BigRational r = 1;
  for (unsigned i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace sslab
