#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "robin_gap/error.hpp"

namespace robin_gap {

/// A real number stored as sign * exp(log_mag).
///
/// Kummer functions grow like e^rho, so values for rho in the thousands are
/// carried in this form and only converted to double at the very end.
struct ScaledReal {
  int sign = 0;         // -1, 0 or +1
  double log_mag = 0.0; // ignored when sign == 0

  static ScaledReal zero() { return {}; }

  static ScaledReal from_double(double v) {
    if (v == 0.0) return {};
    return {v > 0 ? 1 : -1, std::log(std::fabs(v))};
  }

  static ScaledReal from_log(int sign, double log_mag) {
    if (sign == 0) return {};
    return {sign > 0 ? 1 : -1, log_mag};
  }

  bool is_zero() const { return sign == 0; }

  bool representable() const {
    if (sign == 0) return true;
    return log_mag <= kMaxLog && log_mag >= kMinLog;
  }

  /// Plain value; throws OverflowError when the magnitude leaves the normal double range.
  double to_double() const {
    if (sign == 0) return 0.0;
    if (log_mag > kMaxLog)
      throw OverflowError("ScaledReal overflow: log magnitude " + std::to_string(log_mag));
    if (log_mag < kMinLog)
      throw OverflowError("ScaledReal underflow: log magnitude " + std::to_string(log_mag));
    return sign * std::exp(log_mag);
  }

  ScaledReal operator-() const { return {-sign, log_mag}; }

  friend ScaledReal operator*(const ScaledReal& x, const ScaledReal& y) {
    if (x.sign == 0 || y.sign == 0) return {};
    return {x.sign * y.sign, x.log_mag + y.log_mag};
  }

  friend ScaledReal operator/(const ScaledReal& x, const ScaledReal& y) {
    if (y.sign == 0) throw DomainError("ScaledReal division by zero");
    if (x.sign == 0) return {};
    return {x.sign * y.sign, x.log_mag - y.log_mag};
  }

  friend ScaledReal operator*(const ScaledReal& x, double s) { return x * from_double(s); }
  friend ScaledReal operator*(double s, const ScaledReal& x) { return x * from_double(s); }

  // log(DBL_MAX) and log(DBL_MIN): the normal double range.
  static constexpr double kMaxLog = 709.782712893384;
  static constexpr double kMinLog = -708.3964185322641;
};

}  // namespace robin_gap
