#pragma once

namespace hawkes {

// Standard-normal quantile (Wichura's AS 241, double precision).
// Domain (0,1); throws OutOfRange outside.
double normal_quantile(double beta);

double normal_cdf(double x);

double digamma(double x);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

} // namespace hawkes
