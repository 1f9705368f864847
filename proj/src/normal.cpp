#include "ascltsim/normal.hpp"

#include <cmath>
#include <limits>

namespace ascltsim {

namespace {

constexpr double kTailClamp = 40.0;  // Phi saturates to 0/1 beyond this
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 6.28318530717958647692;

void require_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(name) + " must be finite");
  }
}

}  // namespace

Probability std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf: x");
  if (x > kTailClamp) return Probability(1.0);
  if (x < -kTailClamp) return Probability(0.0);
  // erfc is accurate to <1 ulp; for x <= 0 this is directly the left tail,
  // for x > 0 complement the right tail to avoid cancellation.
  if (x <= 0.0) return Probability(0.5 * std::erfc(-x * kInvSqrt2));
  return Probability(1.0 - 0.5 * std::erfc(x * kInvSqrt2));
}

double std_normal_sf(double x) {
  require_finite(x, "std_normal_sf: x");
  if (x > kTailClamp) return 0.0;
  if (x < -kTailClamp) return 1.0;
  return 0.5 * std::erfc(x * kInvSqrt2);
}

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

// Wichura's PPND16 rational approximations (Applied Statistics 37, 1988),
// followed by one Newton step against the erfc-based cdf.
double std_normal_quantile(double p) {
  require_finite(p, "std_normal_quantile: p");
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("std_normal_quantile: p must be in (0,1), got " + std::to_string(p));
  }

  const double q = p - 0.5;
  double x;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) *
                 r +
             4.5921953931549871457e+4) *
                r +
            1.3731693765509461125e+4) *
               r +
           1.9715909503065514427e+3) *
              r +
          1.3314166789178437745e+2) *
             r +
         3.3871328727963666080e+0) /
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) *
                 r +
             2.1213794301586595867e+4) *
                r +
            5.3941960214247511077e+3) *
               r +
           6.8718700749205790830e+2) *
              r +
          4.2313330701600911252e+1) *
             r +
         1.0);
  } else {
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e+0) *
                  r +
              3.64784832476320460504e+0) *
                 r +
             5.76949722146069140550e+0) *
                r +
            4.63033784615654529590e+0) *
               r +
           1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e+0) *
                r +
            2.05319162663775882187e+0) *
               r +
           1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e+0) *
                r +
            5.46378491116411436990e+0) *
               r +
           6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
    }
    if (q < 0.0) x = -x;
  }

  // One Newton polish; negligible except at the extreme clamp edges.
  const double pdf = std_normal_pdf(x);
  if (pdf > 1e-300) {
    const double err = static_cast<double>(std_normal_cdf(x)) - p;
    x -= err / pdf;
  }
  return x;
}

namespace {

// Integrand of the angular reduction: with t = sin(theta),
//   P(Z1>u, Z2>v; r) = sf(u) sf(v)
//     + (1/2pi) Int_0^{asin r} exp(-(u^2 - 2uv sin t + v^2)/(2 cos^2 t)) dt.
// Written to avoid cancellation for u ~ v with theta near pi/2.
double orthant_integrand(double u, double v, double theta) {
  const double s = std::sin(theta);
  // 1 - sin(theta) without cancellation near theta = pi/2
  const double half = 0.78539816339744830962 - 0.5 * theta;  // pi/4 - theta/2
  const double one_minus_s = 2.0 * std::sin(half) * std::sin(half);
  const double cos2 = one_minus_s * (1.0 + s);
  if (cos2 <= 0.0) return 0.0;
  double num;
  if (u * v > 0.0) {
    num = (u - v) * (u - v) + 2.0 * u * v * one_minus_s;
  } else {
    num = u * u - 2.0 * u * v * s + v * v;
  }
  const double expo = -num / (2.0 * cos2);
  return (expo < -745.0) ? 0.0 : std::exp(expo);
}

struct GkResult {
  double integral;
  double error;
};

// Gauss-Kronrod 7-15 on [a,b].
GkResult gk15(double u, double v, double a, double b) {
  static const double xk[8] = {0.0,
                               0.20778495500789846760,
                               0.40584515137739716691,
                               0.58608723546769113029,
                               0.74153118559939443986,
                               0.86486442335976907279,
                               0.94910791234275852453,
                               0.99145537112081263921};
  static const double wk[8] = {0.20948214108472782801, 0.20443294007529889241,
                               0.19035057806478540991, 0.16900472663926790283,
                               0.14065325971552591875, 0.10479001032225018384,
                               0.06309209262997855329, 0.02293532201052922496};
  static const double wg[4] = {0.41795918367346938776, 0.38183005050511894495,
                               0.27970539148927666790, 0.12948496616886969327};

  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = orthant_integrand(u, v, c);
  double resk = wk[0] * f0;
  double resg = wg[0] * f0;
  for (int i = 1; i < 8; ++i) {
    const double f1 = orthant_integrand(u, v, c - h * xk[i]);
    const double f2 = orthant_integrand(u, v, c + h * xk[i]);
    resk += wk[i] * (f1 + f2);
    if (i % 2 == 0) resg += wg[i / 2] * (f1 + f2);
  }
  return {resk * h, std::abs(resk - resg) * std::abs(h)};
}

double adaptive_gk(double u, double v, double a, double b, double tol, int depth) {
  const GkResult r = gk15(u, v, a, b);
  if (r.error <= tol || depth >= 24) return r.integral;
  const double c = 0.5 * (a + b);
  return adaptive_gk(u, v, a, c, 0.5 * tol, depth + 1) +
         adaptive_gk(u, v, c, b, 0.5 * tol, depth + 1);
}

}  // namespace

Probability bivariate_upper_orthant(double u, double v, double r) {
  require_finite(u, "bivariate_upper_orthant: u");
  require_finite(v, "bivariate_upper_orthant: v");
  require_finite(r, "bivariate_upper_orthant: r");
  if (std::abs(r) > 1.0) {
    throw DomainError("bivariate_upper_orthant: |r| must be <= 1, got " + std::to_string(r));
  }

  const double base = std_normal_sf(u) * std_normal_sf(v);
  if (r == 0.0) return Probability(base);

  const double theta_max = std::asin(r);
  const double integral =
      (r > 0.0) ? adaptive_gk(u, v, 0.0, theta_max, 5e-14, 0)
                : -adaptive_gk(u, v, theta_max, 0.0, 5e-14, 0);
  double p = base + integral / kTwoPi;
  if (p < 0.0 && p > -1e-12) p = 0.0;
  if (p > 1.0 && p < 1.0 + 1e-12) p = 1.0;
  return Probability(p);
}

double normal_comparison_term(double u, double v, double r) {
  require_finite(u, "normal_comparison_term: u");
  require_finite(v, "normal_comparison_term: v");
  require_finite(r, "normal_comparison_term: r");
  const double ar = std::abs(r);
  if (ar == 0.0) return 0.0;
  return ar * std::exp(-(u * u + v * v) / (2.0 * (1.0 + ar)));
}

}  // namespace ascltsim
