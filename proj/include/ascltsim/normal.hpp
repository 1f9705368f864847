#ifndef ASCLTSIM_NORMAL_HPP
#define ASCLTSIM_NORMAL_HPP

#include "ascltsim/errors.hpp"

namespace ascltsim {

// A value certified to lie in [0,1].
class Probability {
 public:
  explicit Probability(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DomainError("Probability out of [0,1]: " + std::to_string(v));
    }
  }
  double value() const { return value_; }
  operator double() const { return value_; }

 private:
  double value_;
};

// Standard normal cdf Phi(x). Saturates to exactly 0/1 for |x| > 40.
// Absolute error <= 1e-14 (erfc-based).
Probability std_normal_cdf(double x);

// Survival function 1 - Phi(x), computed without cancellation in the tail.
double std_normal_sf(double x);

// Standard normal density.
double std_normal_pdf(double x);

// Inverse cdf. Requires 0 < p < 1; |Phi(result) - p| <= 1e-12.
double std_normal_quantile(double p);

// P(Z1 > u, Z2 > v) for standard bivariate normal with correlation r,
// |r| <= 1. Absolute error <= 1e-10 (adaptive quadrature on the
// one-dimensional angular reduction of the bivariate cdf).
Probability bivariate_upper_orthant(double u, double v, double r);

// Summand of the normal-comparison bound:
//   |r| * exp(-(u^2 + v^2) / (2 (1 + |r|))).
double normal_comparison_term(double u, double v, double r);

}  // namespace ascltsim

#endif
