#include <doctest.h>

#include <cmath>

#include "ascltsim/normal.hpp"
#include "oracles.hpp"

using namespace ascltsim;

TEST_SUITE_BEGIN("normal");

TEST_CASE("cdf at 0 and tail limits") {
  CHECK(std_normal_cdf(0.0).value() == 0.5);
  CHECK(std::abs(std_normal_cdf(38.0).value() - 1.0) <= 1e-16);
  // documented saturation beyond |x| = 40
  CHECK(std_normal_cdf(41.0).value() == 1.0);
  CHECK(std_normal_cdf(-41.0).value() == 0.0);
}

TEST_CASE("cdf matches the high-precision erfc oracle") {
  // Phi(2) via the long-double series/continued-fraction oracle.
  const double oracle = static_cast<double>(oracles::std_normal_cdf_highprec(2.0L));
  CHECK(std::abs(oracle - 0.9772498680518208) < 1e-15);  // frozen from the oracle
  CHECK(std::abs(std_normal_cdf(2.0).value() - oracle) <= 1e-14);

  for (double x : {-8.0, -3.5, -1.0, -0.1, 0.3, 1.7, 2.0, 4.2, 6.0, 9.5}) {
    const double want = static_cast<double>(oracles::std_normal_cdf_highprec(x));
    CHECK(std::abs(std_normal_cdf(x).value() - want) <= 1e-14);
  }
}

TEST_CASE("cdf symmetry property") {
  oracles::XorShift rng(1234);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.uniform(-10.0, 10.0);
    CHECK(std::abs(std_normal_cdf(x).value() + std_normal_cdf(-x).value() - 1.0) <= 1e-14);
  }
  // monotone nondecreasing
  double prev = 0.0;
  for (double x = -41.0; x <= 41.0; x += 0.125) {
    const double v = std_normal_cdf(x);
    if (x > -41.0) CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("cdf rejects non-finite input") {
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(std_normal_cdf(std::numeric_limits<double>::infinity()), DomainError);
}

TEST_CASE("quantile basics and bisection oracle") {
  CHECK(std_normal_quantile(0.5) == 0.0);

  // oracle: bisection on the cdf itself
  auto cdf = [](double x) { return static_cast<double>(std_normal_cdf(x)); };
  const double oracle = oracles::bisect(cdf, 1.0 - 1e-4, 0.0, 10.0, 1e-13);
  CHECK(std::abs(oracle - 3.71902) < 5e-6);  // the documented approximate value
  CHECK(std::abs(std_normal_quantile(1.0 - 1e-4) - oracle) <= 1e-9);

  CHECK(std::abs(std_normal_quantile(0.9772498681) - 2.0) <= 1e-8);
}

TEST_CASE("quantile rejects out-of-range p") {
  CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(-0.25), DomainError);
  CHECK_THROWS_AS(std_normal_quantile(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("quantile/cdf inverse consistency") {
  oracles::XorShift rng(99);
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.uniform(1e-10, 1.0 - 1e-10);
    CHECK(std::abs(std_normal_cdf(std_normal_quantile(p)).value() - p) <= 1e-12);
  }
  for (double p : {1e-10, 1e-7, 0.5, 1.0 - 1e-7, 1.0 - 1e-10}) {
    CHECK(std::abs(std_normal_cdf(std_normal_quantile(p)).value() - p) <= 1e-12);
  }
}

TEST_CASE("orthant trivial cases") {
  const double sf2 = std_normal_sf(2.0);
  CHECK(std::abs(bivariate_upper_orthant(2.0, 2.0, 0.0).value() - sf2 * sf2) <= 1e-15);
  CHECK(std::abs(sf2 * sf2 - 5.1757e-4) < 1e-8);
  CHECK(std::abs(bivariate_upper_orthant(2.0, 2.0, 1.0).value() - sf2) <= 1e-10);
  CHECK(std::abs(sf2 - 0.02275) < 1e-5);
}

TEST_CASE("orthant against the 2-D density quadrature oracle") {
  struct Case {
    double u, v, r;
  };
  for (const Case c : {Case{2.0, 2.0, 0.5}, Case{1.0, 0.5, -0.4}, Case{3.0, 2.0, 0.8},
                       Case{0.0, 0.0, 0.5}, Case{2.5, 2.5, -0.9}}) {
    const double want = oracles::orthant_by_2d_quadrature(c.u, c.v, c.r);
    CHECK(std::abs(bivariate_upper_orthant(c.u, c.v, c.r).value() - want) <= 1e-10);
  }
  // r = 0 at u = v = 0 is exactly 1/4; r = 1 collapses to a single tail
  CHECK(std::abs(bivariate_upper_orthant(0.0, 0.0, 0.0).value() - 0.25) <= 1e-15);
  CHECK(std::abs(bivariate_upper_orthant(0.0, 0.0, 1.0).value() - 0.5) <= 1e-10);
  // r = -1: P(Z > u, -Z > v) = max(0, Phi(-v) - Phi(u))
  CHECK(std::abs(bivariate_upper_orthant(-1.0, -0.5, -1.0).value() -
                 (std_normal_cdf(0.5).value() - std_normal_cdf(-1.0).value())) <= 1e-10);
  CHECK(bivariate_upper_orthant(1.0, 1.0, -1.0).value() <= 1e-12);
}

TEST_CASE("orthant properties: Slepian monotonicity and bounds") {
  oracles::XorShift rng(4321);
  for (int i = 0; i < 300; ++i) {
    const double u = rng.uniform(-3.0, 4.0);
    const double v = rng.uniform(-3.0, 4.0);
    double r1 = rng.uniform(-1.0, 1.0);
    double r2 = rng.uniform(-1.0, 1.0);
    if (r1 > r2) std::swap(r1, r2);
    const double p1 = bivariate_upper_orthant(u, v, r1);
    const double p2 = bivariate_upper_orthant(u, v, r2);
    CHECK(p1 <= p2 + 1e-10);
    CHECK(p2 <= std::min(std_normal_sf(u), std_normal_sf(v)) + 1e-12);
    // independence factorization
    const double p0 = bivariate_upper_orthant(u, v, 0.0);
    CHECK(std::abs(p0 - std_normal_sf(u) * std_normal_sf(v)) <= 1e-10);
  }
}

TEST_CASE("orthant rejects |r| > 1") {
  CHECK_THROWS_AS(bivariate_upper_orthant(0.0, 0.0, 1.5), DomainError);
  CHECK_THROWS_AS(bivariate_upper_orthant(0.0, 0.0, -1.0001), DomainError);
}

TEST_CASE("normal comparison term") {
  CHECK(normal_comparison_term(3.0, 3.0, 0.0) == 0.0);
  CHECK(normal_comparison_term(0.0, 0.0, 0.5) == 0.5);
  CHECK(std::abs(normal_comparison_term(3.0, 4.0, 0.2) - 0.2 * std::exp(-25.0 / 2.4)) <= 1e-18);
  CHECK(std::abs(normal_comparison_term(3.0, 4.0, -0.2) - 0.2 * std::exp(-25.0 / 2.4)) <= 1e-18);
  // nonnegative, zero iff r = 0
  oracles::XorShift rng(7);
  for (int i = 0; i < 200; ++i) {
    const double u = rng.uniform(-5.0, 5.0);
    const double v = rng.uniform(-5.0, 5.0);
    const double r = rng.uniform(-1.0, 1.0);
    const double t = normal_comparison_term(u, v, r);
    CHECK(t >= 0.0);
    if (r != 0.0) CHECK(t > 0.0);
  }
  CHECK_THROWS_AS(normal_comparison_term(std::numeric_limits<double>::infinity(), 0.0, 0.1),
                  DomainError);
}

TEST_CASE("probability type validates its range") {
  CHECK_THROWS_AS(Probability(-0.1), DomainError);
  CHECK_THROWS_AS(Probability(1.1), DomainError);
  CHECK(Probability(0.25).value() == 0.25);
}

TEST_SUITE_END();
