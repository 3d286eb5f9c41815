#pragma once

// Confluent hypergeometric function of the first kind, M(a, b; rho), summed
// from its power series with running rescaling, plus the small combinatorial
// helpers built on it.

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>

#include "robin_gap/error.hpp"
#include "robin_gap/scaled_real.hpp"

namespace robin_gap {

/// Truncation policy for the Kummer series.
struct SeriesControl {
  double rel_tol = 1e-14;
  std::size_t max_terms = 100000;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
      throw DomainError("SeriesControl: rel_tol must lie in (0, 1)");
    if (max_terms < 1) throw DomainError("SeriesControl: max_terms must be >= 1");
  }
};

/// Full result of a series evaluation; `terms` counts the summed terms including k = 0.
struct KummerEvaluation {
  ScaledReal value;
  std::size_t terms = 0;
  double last_ratio = 0.0;
};

inline bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

/// a^{(k)} = a (a+1) ... (a+k-1), with a^{(0)} = 1.
inline double rising_factorial(double a, unsigned k) {
  double p = 1.0;
  for (unsigned i = 0; i < k; ++i) {
    p *= a + static_cast<double>(i);
    if (!std::isfinite(p))
      throw OverflowError("rising_factorial overflows a double; use rising_factorial_scaled");
  }
  return p;
}

inline ScaledReal rising_factorial_scaled(double a, unsigned k) {
  int sign = 1;
  double log_mag = 0.0;
  for (unsigned i = 0; i < k; ++i) {
    const double f = a + static_cast<double>(i);
    if (f == 0.0) return ScaledReal::zero();
    if (f < 0.0) sign = -sign;
    log_mag += std::log(std::fabs(f));
  }
  return ScaledReal::from_log(sign, log_mag);
}

namespace detail {

inline void check_kummer_args(double a, double b, double rho) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("kummer_m: parameters must be finite");
  if (is_nonpositive_integer(b))
    throw DomainError("kummer_m: b must not be a non-positive integer (got " + std::to_string(b) + ")");
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw DomainError("kummer_m: rho must be finite and non-negative");
}

}  // namespace detail

/// Sums M(a,b;rho) = sum_k a^{(k)}/b^{(k)} rho^k/k!.
///
/// Stops once |term| <= rel_tol |sum| with k past both rho (the hump of the
/// terms) and -a (the region where terms may change sign). The accumulator is
/// divided by 1e250 whenever it or the current term exceeds that threshold,
/// and the scale is carried in log form. Kahan compensation absorbs the
/// cancellation of the alternating head when a < 0.
inline KummerEvaluation kummer_m_evaluate(double a, double b, double rho,
                                          const SeriesControl& ctrl = {}) {
  detail::check_kummer_args(a, b, rho);
  ctrl.validate();
  if (rho == 0.0) return {ScaledReal::from_double(1.0), 1, 0.0};

  constexpr double kRescale = 1e250;
  const double log_rescale = std::log(kRescale);

  double sum = 1.0;
  double comp = 0.0;
  double term = 1.0;
  double log_scale = 0.0;
  double ratio = 0.0;
  std::size_t terms = 1;

  for (std::size_t k = 0;; ++k) {
    if (terms >= ctrl.max_terms) {
      std::ostringstream msg;
      msg << "kummer_m(" << a << ", " << b << ", " << rho << ") did not converge in "
          << ctrl.max_terms << " terms; last term ratio " << ratio;
      throw ConvergenceError(msg.str());
    }
    const double kd = static_cast<double>(k);
    ratio = (a + kd) / (b + kd) * rho / (kd + 1.0);
    term *= ratio;
    if (term == 0.0) break;  // a is a non-positive integer: the series is a polynomial
    ++terms;

    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;

    if (std::fabs(sum) > kRescale || std::fabs(term) > kRescale) {
      sum /= kRescale;
      term /= kRescale;
      comp /= kRescale;
      log_scale += log_rescale;
    }

    const double next = kd + 1.0;
    if (next > rho && next > -a && std::fabs(term) <= ctrl.rel_tol * std::fabs(sum)) break;
  }

  if (sum == 0.0) return {ScaledReal::zero(), terms, ratio};
  return {ScaledReal::from_log(sum > 0 ? 1 : -1, std::log(std::fabs(sum)) + log_scale), terms,
          ratio};
}

inline ScaledReal kummer_m(double a, double b, double rho, const SeriesControl& ctrl = {}) {
  return kummer_m_evaluate(a, b, rho, ctrl).value;
}

/// M'(a,b;rho) = (a/b) M(a+1, b+1; rho).
inline ScaledReal kummer_m_derivative(double a, double b, double rho,
                                      const SeriesControl& ctrl = {}) {
  detail::check_kummer_args(a, b, rho);
  if (a == 0.0) return ScaledReal::zero();
  return kummer_m(a + 1.0, b + 1.0, rho, ctrl) * (a / b);
}

/// M(a+1, b+1; rho) / M(a, b; rho), formed from the log magnitudes so that
/// both values may lie far outside the double range.
inline double kummer_ratio(double a, double b, double rho, const SeriesControl& ctrl = {}) {
  const ScaledReal den = kummer_m(a, b, rho, ctrl);
  if (den.is_zero()) throw DomainError("kummer_ratio: M(a,b;rho) vanishes");
  const ScaledReal num = kummer_m(a + 1.0, b + 1.0, rho, ctrl);
  return (num / den).to_double();
}

/// Regularized upper incomplete gamma Q(n, x0) = e^{-x0} sum_{k<n} x0^k / k! for integer n.
inline double upper_incomplete_gamma_regularized(int n, double x0) {
  if (n < 1) throw DomainError("upper_incomplete_gamma_regularized: n must be >= 1");
  if (!(x0 >= 0.0)) throw DomainError("upper_incomplete_gamma_regularized: x0 must be >= 0");
  if (x0 == 0.0) return 1.0;
  const double lx = std::log(x0);
  double q = 0.0;
  for (int k = 0; k < n; ++k)
    q += std::exp(-x0 + k * lx - std::lgamma(static_cast<double>(k) + 1.0));
  return q > 1.0 ? 1.0 : q;
}

}  // namespace robin_gap
