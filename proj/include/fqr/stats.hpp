#pragma once

#include "fqr/types.hpp"

namespace fqr {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal distribution function, accurate over the full range.
double normal_cdf(double x);

/// Inverse of the standard normal distribution function (Acklam's rational
/// approximation polished with one Halley step).
double normal_quantile(double p);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Upper tail P(X > x) for a chi-square variable with df degrees of freedom.
double chi_square_upper_tail(double df, double x);

/// Lower tail of the chi-square distribution.
double chi_square_cdf(double df, double x);

/// Hall-Sheather bandwidth for quantile sparsity estimation at level tau,
/// nominal level alpha.
double hall_sheather_bandwidth(Index n, double tau, double alpha = 0.05);

}  // namespace fqr
