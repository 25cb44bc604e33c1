#include <chrono>
#include <cmath>

#include "doctest.h"
#include "sslab/prime_moments.hpp"

using namespace sslab;

TEST_SUITE("prime-moments") {

TEST_CASE("sieve_lambda hand values") {
  LambdaSegment seg = sieve_lambda(1, 10);
  CHECK(seg.at(1) == 0.0);
  CHECK(seg.at(2) == doctest::Approx(std::log(2.0)));
  CHECK(seg.at(4) == doctest::Approx(std::log(2.0)));
  CHECK(seg.at(6) == 0.0);
  CHECK(seg.at(8) == doctest::Approx(std::log(2.0)));
  CHECK(seg.at(9) == doctest::Approx(std::log(3.0)));
  CHECK(seg.at(10) == 0.0);

  // psi(10) - psi(5) = log 7 + log 2 + log 3 = log 42
  double sum = 0;
  for (uint64_t n = 6; n <= 10; ++n) sum += seg.at(n);
  CHECK(sum == doctest::Approx(std::log(42.0)).epsilon(1e-14));
}

TEST_CASE("sieve_lambda matches a windowed segment") {
  LambdaSegment all = sieve_lambda(1, 40000);
  LambdaSegment mid = sieve_lambda(30000, 31000);
  for (uint64_t n = 30000; n <= 31000; ++n) CHECK(mid.at(n) == all.at(n));
}

TEST_CASE("sieve_lambda budget guards") {
  CHECK_THROWS_AS(sieve_lambda(1, 23000000), BudgetError);
  CHECK_THROWS_AS(sieve_lambda(10, 5), std::domain_error);
}

TEST_CASE("guide curve closed form") {
  // at N = e^4 the closed form gives e^2 * (0.5*4)^2 = 4 e^2; the nearest
  // integer N = 55 sits within a percent of that
  CHECK(guide_curve(55, 0.5, 3) ==
        doctest::Approx(4.0 * std::exp(2.0)).epsilon(0.02));
  // frozen hand value: sqrt(100) * (0.5 ln 100)^2
  CHECK(guide_curve(100, 0.5, 3) ==
        doctest::Approx(53.01898110478398).epsilon(1e-14));
  // k = 1: the N power drops out
  CHECK(guide_curve(1000, 0.25, 1) ==
        doctest::Approx(0.75 * std::log(1000.0)));
  CHECK(guide_curve(10000000, 0.25, 7) > 0.0);
  CHECK(guide_curve(10000000, 0.25, 7) > guide_curve(1000000, 0.25, 7));
  CHECK_THROWS_AS(guide_curve(100, 0.0, 3), std::domain_error);
  CHECK_THROWS_AS(guide_curve(100, 1.0, 3), std::domain_error);
}

TEST_CASE("window moments: direct fixture at N = 10") {
  // H = floor(10^0.5) = 3, n from 10 to 20
  LambdaSegment seg = sieve_lambda(1, 30);
  auto psi_window = [&](uint64_t n) {
    double s = 0;
    for (uint64_t m = n + 1; m <= n + 3; ++m) s += seg.at(m);
    return s;
  };
  double expect2 = 0, expect3 = 0;
  for (uint64_t n = 10; n <= 20; ++n) {
    double d = psi_window(n) - 3.0;
    expect2 += d * d;
    expect3 += d * d * d;
  }
  expect2 /= 10.0;
  expect3 /= 10.0;

  auto rows = psi_window_moments(10, 0.5, {2, 3});
  CHECK(rows[0].H == 3);
  CHECK(rows[0].value == doctest::Approx(expect2).epsilon(1e-12));
  CHECK(rows[1].value == doctest::Approx(expect3).epsilon(1e-12));
}

TEST_CASE("from-one convention sums n over [1, N]") {
  LambdaSegment seg = sieve_lambda(1, 30);
  double expect = 0;
  for (uint64_t n = 1; n <= 10; ++n) {
    double s = 0;
    for (uint64_t m = n + 1; m <= n + 3; ++m) s += seg.at(m);
    double d = s - 3.0;
    expect += d * d;
  }
  expect /= 10.0;
  auto rows = psi_window_moments(10, 0.5, {2}, 1, /*from_one=*/true);
  CHECK(rows[0].value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("even moments are nonnegative") {
  PrimeWindowMoments pw(300000, 2);
  for (uint64_t N : {1000, 30000, 100000}) {
    auto rows = pw.moments(N, 0.5, {2, 4});
    CHECK(rows[0].value >= 0.0);
    CHECK(rows[1].value >= 0.0);
  }
}

TEST_CASE("window telescoping against coverage counts") {
  const uint64_t N = 10000;
  const double delta = 0.5;
  const uint64_t H = static_cast<uint64_t>(std::floor(std::pow(double(N), delta)));
  PrimeWindowMoments pw(2 * N + H + 1, 2);

  // sum of S(n) over [N, 2N] via the k = 1 moment
  auto rows = pw.moments(N, delta, {1});
  double sum_s = rows[0].value * double(N) + double(N + 1) * double(H);

  // independent coverage count: each Lambda(m) is counted once per n with
  // n < m <= n + H and N <= n <= 2N
  double expect = 0;
  for (uint64_t m = N + 1; m <= 2 * N + H; ++m) {
    uint64_t lo = (m > H) ? std::max(N, m - H) : N;
    uint64_t hi = std::min(2 * N, m - 1);
    if (lo > hi) continue;
    expect += pw.lambda(m) * double(hi - lo + 1);
  }
  CHECK(sum_s == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("first moment stays within ten guide curves") {
  PrimeWindowMoments pw(2100000, 2);
  for (uint64_t N : {10000, 100000, 1000000}) {
    auto rows = pw.moments(N, 0.5, {1});
    CHECK(std::abs(rows[0].value) <= 10.0 * guide_curve(N, 0.5, 1));
  }
}

TEST_CASE("doubling N roughly doubles the pass" * doctest::timeout(300)) {
  PrimeWindowMoments pw(8100000, 2);
  auto time_pass = [&](uint64_t N) {
    double best = 1e300;
    for (int rep = 0; rep < 5; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      auto rows = pw.moments(N, 0.5, {3});
      auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count() +
                                 0.0 * rows[0].value);
    }
    return best;
  };
  time_pass(1000000);  // warm up
  double t1 = time_pass(2000000);
  double t2 = time_pass(4000000);
  CHECK(t2 / t1 <= 2.5);
}

}  // TEST_SUITE
