#ifndef EPILATENT_SPECIAL_HPP
#define EPILATENT_SPECIAL_HPP

#include <vector>

namespace epilatent {

double digamma(double x);

double lbeta(double a, double b);

/// log of the binomial coefficient C(n, k) for real n >= k >= 0.
double lchoose(double n, double k);

/// Standard normal CDF.
double norm_cdf(double x);

/// Inverse standard normal CDF (Wichura's AS241, ~1e-15 relative accuracy).
double inv_norm_cdf(double p);

/// Regularized incomplete beta function I_x(a, b) by continued fraction.
double inc_beta(double a, double b, double x);

/// log(sum(exp(v))) with max shift; -inf input elements are permitted.
double log_sum_exp(const std::vector<double>& v);

}  // namespace epilatent

#endif
