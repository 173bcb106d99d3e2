#ifndef DNAMIX_LOG_SCALAR_HPP
#define DNAMIX_LOG_SCALAR_HPP

#include <cmath>
#include <limits>

namespace dnamix {

/// A non-negative real stored as mantissa * exp(log_scale).
///
/// Normalizing constants of large networks underflow double precision long
/// before their logarithms become unrepresentable, so the engine reports
/// them in this split form.
struct LogScalar {
  double mantissa = 1.0;
  double log_scale = 0.0;

  static LogScalar zero() { return {0.0, 0.0}; }
  static LogScalar from_log(double log_value) {
    if (std::isinf(log_value) && log_value < 0) return zero();
    return {1.0, log_value};
  }

  bool is_zero() const { return mantissa == 0.0; }

  double log() const {
    if (mantissa == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(mantissa) + log_scale;
  }

  double value() const { return mantissa == 0.0 ? 0.0 : std::exp(log()); }

  friend LogScalar operator*(LogScalar a, LogScalar b) {
    return {a.mantissa * b.mantissa, a.log_scale + b.log_scale};
  }

  friend LogScalar operator/(LogScalar a, LogScalar b) {
    return {a.mantissa / b.mantissa, a.log_scale - b.log_scale};
  }
};

}  // namespace dnamix

#endif  // DNAMIX_LOG_SCALAR_HPP
