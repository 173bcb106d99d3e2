#ifndef DNAMIX_GAMMA_HPP
#define DNAMIX_GAMMA_HPP

#include <cmath>
#include <limits>

#include "dnamix/errors.hpp"

namespace dnamix::gamma {

namespace detail {

constexpr int max_iterations = 10000;
constexpr double epsilon = 1e-16;

// log of x^a e^{-x} / Gamma(a)
inline double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

inline double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < max_iterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * epsilon) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
inline double upper_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < max_iterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < epsilon) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x), a > 0.
inline double regularized_lower(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("incomplete gamma needs a positive shape");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return detail::lower_series(a, x);
  return 1.0 - detail::upper_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_upper(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("incomplete gamma needs a positive shape");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - detail::lower_series(a, x);
  return detail::upper_fraction(a, x);
}

/// CDF of Gamma(shape, scale); shape 0 is the point mass at zero.
inline double cdf(double x, double shape, double scale) {
  if (shape == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  return regularized_lower(shape, x / scale);
}

inline double survival(double x, double shape, double scale) {
  if (shape == 0.0) return x >= 0.0 ? 0.0 : 1.0;
  return regularized_upper(shape, x / scale);
}

/// Log density of Gamma(shape, scale) at x > 0; -inf for shape 0.
inline double log_pdf(double x, double shape, double scale) {
  if (shape == 0.0 || x <= 0.0) return -std::numeric_limits<double>::infinity();
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

inline double pdf(double x, double shape, double scale) { return std::exp(log_pdf(x, shape, scale)); }

}  // namespace dnamix::gamma

#endif  // DNAMIX_GAMMA_HPP
