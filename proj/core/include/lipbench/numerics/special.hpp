#pragma once

namespace lipbench {

/// Error function and complement, implemented without libm's erf/erfc:
/// positive-term series below |x| = 2.5, Lentz continued fraction above.
double erf_series(double x);
double erfc_accurate(double x);

/// Standard normal CDF and density.
double norm_cdf(double x);
double norm_pdf(double x);

/// Inverse of the standard normal CDF for p in (0, 1).
///
/// Rational initial guess (Acklam) refined by one Newton step against
/// norm_cdf. Throws DomainError for p outside (0, 1).
double inv_norm_cdf(double p);

}  // namespace lipbench
