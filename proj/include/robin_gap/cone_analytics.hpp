#pragma once

// Closed-form ground state of the Robin Laplacian on the infinite cone
// C = {|y| < tan(theta/2) x}, and a cutoff trial function on the truncated
// cone {x < 1} that bounds the second Robin eigenvalue of the double cone.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "robin_gap/error.hpp"
#include "robin_gap/special_functions.hpp"

namespace robin_gap {

struct ConeParams {
  double theta = std::numbers::pi / 2;
  double alpha = -1.0;
  int n = 2;

  void validate() const {
    if (!(theta > 0.0 && theta < std::numbers::pi))
      throw DomainError("ConeParams: theta must lie in (0, pi)");
    if (!(alpha < 0.0) || !std::isfinite(alpha)) throw DomainError("ConeParams: alpha must be negative");
    if (n < 2) throw DomainError("ConeParams: n must be >= 2");
  }
  double half_sin() const { return std::sin(0.5 * theta); }
  double half_tan() const { return std::tan(0.5 * theta); }
};

struct TrialBoundReport {
  double theta = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  double lambda1_cone = 0.0;
  double quotient = 0.0;
  double tail_mass = 0.0;
  // int chi'^2 phi^2 / int chi^2 phi^2; the quotient minus lambda1_cone should equal it.
  double localization_excess = 0.0;
};

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// Surface measure of the unit sphere S^d in R^{d+1} (2 for d = 0).
inline double unit_sphere_measure(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

inline double cone_ground_energy(const ConeParams& cp) {
  cp.validate();
  const double s = cp.half_sin();
  return -cp.alpha * cp.alpha / (s * s);
}

/// A > 0 with int_C (A e^{alpha x / sin(theta/2)})^2 dV = 1:
/// A^{-2} = V_{n-1} Gamma(n) tan^{n-1}(theta/2) (sin(theta/2) / (2|alpha|))^n,
/// where V_{n-1} is the volume of the unit ball in R^{n-1}.
inline double cone_normalization(const ConeParams& cp) {
  cp.validate();
  const double log_inv_sq = std::log(unit_ball_volume(cp.n - 1)) + std::lgamma(static_cast<double>(cp.n)) +
                            (cp.n - 1) * std::log(cp.half_tan()) +
                            cp.n * std::log(cp.half_sin() / (2.0 * std::fabs(cp.alpha)));
  return std::exp(-0.5 * log_inv_sq);
}

inline double cone_ground_state(const ConeParams& cp, double x) {
  if (!(x >= 0.0)) throw DomainError("cone_ground_state: x must be non-negative");
  return cone_normalization(cp) * std::exp(cp.alpha * x / cp.half_sin());
}

/// Mass of the normalized ground state beyond x = 1 - eps: Q(n, 2(1-eps)|alpha|/sin(theta/2)).
inline double tail_mass(const ConeParams& cp, double eps) {
  cp.validate();
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("tail_mass: eps must lie in (0, 1]");
  return upper_incomplete_gamma_regularized(cp.n, 2.0 * (1.0 - eps) * std::fabs(cp.alpha) / cp.half_sin());
}

/// exp(-4 (1-eps) |alpha| / theta).
inline double gap_envelope(double alpha, double eps, double theta) {
  if (!(theta > 0.0)) throw DomainError("gap_envelope: theta must be positive");
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("gap_envelope: eps must lie in [0, 1)");
  return std::exp(-4.0 * (1.0 - eps) * std::fabs(alpha) / theta);
}

namespace detail {

// Smooth step from 1 (t <= 0) to 0 (t >= 1): g(1-t) / (g(t) + g(1-t)), g(u) = e^{-1/u}.
// Returns the value and d/dt.
struct CutoffValue {
  double value;
  double slope;
};

inline CutoffValue smooth_cutoff(double t) {
  if (t <= 0.0) return {1.0, 0.0};
  if (t >= 1.0) return {0.0, 0.0};
  const double p = std::exp(-1.0 / t);
  const double q = std::exp(-1.0 / (1.0 - t));
  const double s = p + q;
  const double slope = -(p * q / (s * s)) * (1.0 / ((1.0 - t) * (1.0 - t)) + 1.0 / (t * t));
  return {q / s, slope};
}

template <class F>
double integrate(F f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol, &err);
  if (!std::isfinite(v) || err > 1e3 * tol * std::fabs(v) + 1e-300)
    throw ConvergenceError("trial_upper_bound: quadrature did not reach the requested tolerance");
  return v;
}

}  // namespace detail

/// Cutoff chi(x): 1 on [0, 1-eps], 0 on [1, inf), smooth in between.
inline double trial_cutoff(double x, double eps) {
  return detail::smooth_cutoff((x - (1.0 - eps)) / eps).value;
}

/// Rayleigh quotient of psi = chi phi on the truncated cone {x < 1}.
///
/// phi depends on x only, so each integral reduces to one dimension with the
/// cross-section volume V(x) = V_{n-1} (tan(theta/2) x)^{n-1} and the lateral
/// surface element S(x) = |S^{n-2}| (tan(theta/2) x)^{n-2} / cos(theta/2).
/// The normalization of phi cancels and is dropped.
inline TrialBoundReport trial_upper_bound(const ConeParams& cp, double eps, double quad_tol = 1e-12) {
  cp.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("trial_upper_bound: eps must lie in (0, 1)");
  if (!(quad_tol > 0.0)) throw DomainError("trial_upper_bound: quad_tol must be positive");

  const double s = cp.half_sin();
  const double tn = cp.half_tan();
  const double c = std::cos(0.5 * cp.theta);
  const double rate = cp.alpha / s;  // d/dx log phi
  const int n = cp.n;
  const double vol_c = unit_ball_volume(n - 1);
  const double surf_c = unit_sphere_measure(n - 2) / c;

  auto cross = [&](double x) { return vol_c * std::pow(tn * x, n - 1); };
  auto lateral = [&](double x) { return surf_c * std::pow(tn * x, n - 2); };
  auto phi2 = [&](double x) { return std::exp(2.0 * rate * x); };

  // psi^2, psi'^2 and chi'^2 phi^2 at x.
  struct Local {
    double psi2, dpsi2, dchi2;
  };
  auto local = [&](double x) {
    const auto ch = detail::smooth_cutoff((x - (1.0 - eps)) / eps);
    const double chi = ch.value;
    const double dchi = ch.slope / eps;
    const double e2 = phi2(x);
    const double d = dchi + chi * rate;  // psi' / phi
    return Local{chi * chi * e2, d * d * e2, dchi * dchi * e2};
  };

  // Split the plateau at a few decay lengths so the adaptive rule sees the peak.
  const double x0 = 1.0 - eps;
  const double decay = 1.0 / (2.0 * std::fabs(rate));
  const double split = std::min(x0, 40.0 * decay);

  auto integral = [&](auto&& g) {
    return detail::integrate(g, 0.0, split, quad_tol) + detail::integrate(g, split, x0, quad_tol) +
           detail::integrate(g, x0, 1.0, quad_tol);
  };
  const double mass = integral([&](double x) { return local(x).psi2 * cross(x); });
  const double kinetic = integral([&](double x) { return local(x).dpsi2 * cross(x); });
  const double boundary = integral([&](double x) { return local(x).psi2 * lateral(x); });
  const double excess = detail::integrate([&](double x) { return local(x).dchi2 * cross(x); }, x0, 1.0, quad_tol);

  if (!(mass > 0.0)) throw ConvergenceError("trial_upper_bound: trial mass underflowed");

  TrialBoundReport r;
  r.theta = cp.theta;
  r.alpha = cp.alpha;
  r.eps = eps;
  r.lambda1_cone = cone_ground_energy(cp);
  r.quotient = (kinetic + cp.alpha * boundary) / mass;
  r.tail_mass = tail_mass(cp, eps);
  r.localization_excess = excess / mass;
  return r;
}

}  // namespace robin_gap
