#include "lipbench/numerics/special.hpp"

#include <cmath>
#include <numbers>

#include "lipbench/errors.hpp"

namespace lipbench {
namespace {

constexpr double kSeriesCutoff = 2.5;

// erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))
double erf_positive_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x2) * sum;
}

// erfc(x) for x >= kSeriesCutoff via the continued fraction
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
double erfc_continued_fraction(double x) {
  constexpr double kTiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = x + a / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi) / f;
}

// Acklam's rational approximation, lower half (p <= 0.5).
double acklam_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;
  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double inv_lower(double p) {
  double x = acklam_lower(p);
  const double density = norm_pdf(x);
  if (density > 0.0) x -= (norm_cdf(x) - p) / density;
  return x;
}

}  // namespace

double erf_series(double x) {
  if (x < 0.0) return -erf_series(-x);
  if (x < kSeriesCutoff) return erf_positive_series(x);
  return 1.0 - erfc_continued_fraction(x);
}

double erfc_accurate(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 2.0 - erfc_accurate(-x);
  if (x < kSeriesCutoff) return 1.0 - erf_positive_series(x);
  if (x > 27.3) return 0.0;
  return erfc_continued_fraction(x);
}

double norm_cdf(double x) { return 0.5 * erfc_accurate(-x / std::numbers::sqrt2); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inv_norm_cdf: p must lie in (0, 1)");
  if (p > 0.5) return -inv_lower(1.0 - p);
  return inv_lower(p);
}

}  // namespace lipbench
