#pragma once

// Radial ground state of (-Delta - kappa/r) phi = E phi on the ball B(R) with
// the boundary condition (d_r + gamma) phi = 0, and its whole-space limit.
//
// Two independent routes are provided:
//   * the Kummer route: E = -kappa^2/(4 z^2), where z is the smallest positive
//     root of  2 (a0/b0) M(a0+1, b0+1; rho0) = (1 - 2 gamma z/kappa) M(a0, b0; rho0)
//     with m = (n-3)/2, a0 = m+1-z, b0 = 2m+2, rho0 = kappa R / z
//     (gamma = +inf reduces the condition to M(a0, b0; rho0) = 0);
//   * the shooting route: integrate -v'' + m(m+1)/r^2 v - kappa/r v = E v for
//     v = r^{m+1} u and bisect E on the boundary residual at r = R.
//
// Only negative ground-state energies are represented by the Kummer route; a
// problem whose ground energy is non-negative has no root and is reported as
// a BracketError.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "robin_gap/error.hpp"
#include "robin_gap/fit.hpp"
#include "robin_gap/parallel.hpp"
#include "robin_gap/special_functions.hpp"

namespace robin_gap {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Parameters (R, kappa, gamma, n) of the ball problem. gamma = +inf is Dirichlet.
class BallProblem {
 public:
  BallProblem(double R, double kappa, double gamma, int n)
      : R_(R), kappa_(kappa), gamma_(gamma), n_(n), m_(0.5 * (n - 3)) {
    if (!(R > 0.0)) throw DomainError("BallProblem: R must be positive");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("BallProblem: kappa must be positive");
    if (n < 2) throw DomainError("BallProblem: n must be >= 2");
    if (std::isnan(gamma) || gamma == -kInf) throw DomainError("BallProblem: gamma must be real or +inf");
  }

  double R() const { return R_; }
  double kappa() const { return kappa_; }
  double gamma() const { return gamma_; }
  int n() const { return n_; }
  double m() const { return m_; }
  double b0() const { return 2.0 * m_ + 2.0; }
  bool dirichlet() const { return gamma_ == kInf; }
  bool finite_radius() const { return std::isfinite(R_); }

  /// kappa/(n-1): below it the ground state satisfies z < m+1, above it z > m+1.
  double gamma_threshold() const { return kappa_ / (n_ - 1); }

  /// Whole-space ground energy -kappa^2/(n-1)^2.
  double limit_energy() const { return -kappa_ * kappa_ / ((n_ - 1.0) * (n_ - 1.0)); }

  BallProblem with_radius(double R) const { return {R, kappa_, gamma_, n_}; }

 private:
  double R_, kappa_, gamma_;
  int n_;
  double m_;
};

/// A root z of the transcendental equation together with its energy.
struct ModeSolution {
  double z = 0.0;
  double E = 0.0;
  double residual = 0.0;
  std::pair<double, double> bracket{0.0, 0.0};  // final bracket in z
  double a0 = 0.0;  // m+1-z, carried separately so that |E - E_limit| keeps full precision

  /// |E - E_limit| computed from a0 without cancellation.
  double limit_deviation(double kappa, double m) const {
    const double mp1 = m + 1.0;
    return std::fabs(kappa * kappa / 4.0 * a0 * (2.0 * mp1 - a0) / (z * z * mp1 * mp1));
  }
};

struct RhoBrackets {
  double rho_minus = 0.0;
  double rho_plus = 0.0;
  double c = 0.0;
};

/// |E - E_limit| at or below this is rounding, not convergence.
inline constexpr double kConvergenceFloor = 1e-13;

struct ConvergenceRow {
  double R = 0.0;
  double z = 0.0;
  double E = 0.0;
  double E_limit = 0.0;
  double abs_err = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  FitResult fit;
};

inline double eigenvalue_from_z(double z, double kappa, int sign) {
  if (!(z > 0.0)) throw DomainError("eigenvalue_from_z: z must be positive");
  if (sign != 1 && sign != -1) throw DomainError("eigenvalue_from_z: sign must be +1 or -1");
  return sign * kappa * kappa / (4.0 * z * z);
}

/// -kappa^2 / (4 (j + (n-3)/2)^2): the radial spectrum of -Delta - kappa/r on R^n.
inline double whole_space_eigenvalue(int j, double kappa, int n) {
  if (j < 1) throw DomainError("whole_space_eigenvalue: j must be >= 1");
  if (n < 2) throw DomainError("whole_space_eigenvalue: n must be >= 2");
  const double s = j + 0.5 * (n - 3);
  return -kappa * kappa / (4.0 * s * s);
}

namespace detail {

struct ResidualSample {
  double value = 0.0;  // ratio-form residual (NaN where M(a0,b0;rho0) = 0)
  int sign = 0;        // sign of the unnormalized residual, defined everywhere
};

// Residual parametrized by a0 = m+1-z so that z extremely close to m+1 keeps
// full relative precision in a0.
inline ResidualSample residual_at_a0(double a0, const BallProblem& p, const SeriesControl& ctrl) {
  const double z = (p.m() + 1.0) - a0;
  const double rho0 = p.kappa() * p.R() / z;
  const double b0 = p.b0();
  const ScaledReal M = kummer_m(a0, b0, rho0, ctrl);

  if (p.dirichlet()) {
    double v = 0.0;
    if (M.sign != 0) v = M.sign * std::min(1.0, std::exp(std::min(M.log_mag, 1.0)));
    return {v, M.sign};
  }

  const double c = 1.0 - 2.0 * p.gamma() * z / p.kappa();
  if (a0 == 0.0) {
    const double v = -c * M.to_double();
    return {v, v > 0 ? 1 : (v < 0 ? -1 : 0)};
  }
  const ScaledReal M1 = kummer_m(a0 + 1.0, b0 + 1.0, rho0, ctrl);
  const ScaledReal lead = M1 * (2.0 * a0 / b0);
  if (M.is_zero()) return {std::numeric_limits<double>::quiet_NaN(), lead.sign};

  const ScaledReal t = lead / M;
  double F;
  if (t.is_zero() || t.log_mag < -700.0)
    F = -c;
  else if (t.log_mag > 600.0)
    F = t.sign * std::numeric_limits<double>::max();
  else
    F = t.to_double() - c;
  const int fs = F > 0 ? 1 : (F < 0 ? -1 : 0);
  return {F, fs * M.sign};
}

}  // namespace detail

/// Residual of the transcendental equation at z, divided through by M(a0,b0;rho0).
/// For gamma = +inf returns sign(M) * min(1, |M|).
inline double transcendental_residual(double z, const BallProblem& prob,
                                      const SeriesControl& ctrl = {}) {
  if (!(z > 0.0)) throw DomainError("transcendental_residual: z must be positive");
  if (!prob.finite_radius()) throw DomainError("transcendental_residual: R must be finite");
  const auto s = detail::residual_at_a0((prob.m() + 1.0) - z, prob, ctrl);
  if (std::isnan(s.value))
    throw BracketError("transcendental_residual: M(a0,b0;rho0) vanishes at z = " + std::to_string(z));
  return s.value;
}

/// rho_-(z) = log(1 - 2 gamma z/kappa) + log((m+1)/(m+1-z)),  rho_+(z) = c log((m+1)/(m+1-z)).
inline RhoBrackets rho_brackets(double z, const BallProblem& prob, double c) {
  const double mp1 = prob.m() + 1.0;
  if (!(z > 0.0 && z < mp1)) throw DomainError("rho_brackets: need 0 < z < m+1");
  if (!(c > 1.0)) throw DomainError("rho_brackets: need c > 1");
  const double w = prob.dirichlet() ? -kInf : 1.0 - 2.0 * prob.gamma() * z / prob.kappa();
  if (!(w > 0.0)) throw DomainError("rho_brackets: need 1 - 2 gamma z / kappa > 0");
  const double L = std::log(mp1 / (mp1 - z));
  return {std::log(w) + L, c * L, c};
}

/// Smallest positive root z of the transcendental equation (the radial ground state).
///
/// The scan runs over a geometric z grid with 400 points. Below the gamma
/// threshold the grid covers [1e-3 (m+1), m+1); otherwise it starts at m+1 and
/// runs to 8 (m+1), extended once to 1e4 (m+1). The root is then bisected in
/// the offset |a0| = |m+1-z|, geometrically while the bracket spans more than
/// a factor of two, until the z width is below tol and the offset is known to
/// 1e-13 relative.
inline ModeSolution ground_state_z(const BallProblem& prob, double tol = 1e-12,
                                   const SeriesControl& ctrl = {}) {
  if (!prob.finite_radius()) throw DomainError("ground_state_z: R must be finite");
  if (!(tol > 0.0)) throw DomainError("ground_state_z: tol must be positive");
  if (!prob.dirichlet() && !(prob.gamma() > -prob.gamma_threshold()))
    throw DomainError("ground_state_z: gamma must exceed -kappa/(n-1)");

  const double mp1 = prob.m() + 1.0;
  auto finish = [&](double a0, std::pair<double, double> zb) {
    ModeSolution s;
    s.a0 = a0;
    s.z = mp1 - a0;
    s.E = eigenvalue_from_z(s.z, prob.kappa(), -1);
    s.residual = detail::residual_at_a0(a0, prob, ctrl).value;
    s.bracket = zb;
    return s;
  };

  const bool below = !prob.dirichlet() && prob.gamma() < prob.gamma_threshold();
  if (!prob.dirichlet() && prob.gamma() == prob.gamma_threshold())
    return finish(0.0, {mp1, mp1});  // e^{-kappa r/(n-1)} already meets the boundary condition

  // Offsets d > 0 with z = m+1 - sd, where sd = +1 below the threshold and -1 above.
  const double sd = below ? 1.0 : -1.0;
  auto sign_at = [&](double d) { return detail::residual_at_a0(sd * d, prob, ctrl).sign; };

  // Grid of offsets ordered by increasing z.
  std::vector<double> offsets;
  constexpr int kScan = 400;
  if (below) {
    const double z0 = 1e-3 * mp1;
    for (int i = 0; i < kScan - 1; ++i) {
      const double z = z0 * std::pow(mp1 / z0, static_cast<double>(i) / (kScan - 1));
      offsets.push_back(mp1 - z);
    }
    offsets.push_back(0.0);
  } else {
    offsets.push_back(0.0);
    for (int i = 1; i < kScan; ++i)
      offsets.push_back(mp1 * std::pow(8.0, static_cast<double>(i) / (kScan - 1)) - mp1);
    for (int i = 1; i < kScan; ++i)
      offsets.push_back(8.0 * mp1 * std::pow(1250.0, static_cast<double>(i) / (kScan - 1)) - mp1);
  }

  auto sign_on_grid = [&](double d) {
    if (d > 0.0) return sign_at(d);
    // a0 = 0: M(0,b0;.) = 1, so the unnormalized residual is -c (finite gamma) or 1 (Dirichlet).
    if (prob.dirichlet()) return 1;
    const double c = 1.0 - 2.0 * prob.gamma() * mp1 / prob.kappa();
    return c > 0 ? -1 : 1;
  };

  int prev = sign_on_grid(offsets[0]);
  std::size_t cell = offsets.size();
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    const int s = sign_on_grid(offsets[i]);
    if (s != 0 && prev != 0 && s != prev) {
      cell = i;
      break;
    }
    if (s == 0) return finish(sd * offsets[i], {mp1 - sd * offsets[i], mp1 - sd * offsets[i]});
    prev = s;
  }
  if (cell == offsets.size()) {
    std::ostringstream msg;
    msg << "ground_state_z: no sign change for z in ["
        << mp1 - sd * offsets.front() << ", " << mp1 - sd * offsets.back()
        << "] (the ground energy may be non-negative)";
    throw BracketError(msg.str());
  }

  double lo = std::min(offsets[cell - 1], offsets[cell]);
  double hi = std::max(offsets[cell - 1], offsets[cell]);
  if (lo == 0.0) {
    // The root sits in the cell touching a0 = 0; move the open end to the smallest normal offset.
    lo = std::numeric_limits<double>::min();
    if (sign_at(lo) == sign_at(hi)) return finish(0.0, {mp1, mp1});
  }
  const int s_lo = sign_at(lo);
  for (int it = 0; it < 4000; ++it) {
    const bool wide = hi > 2.0 * lo;
    if (!wide && (hi - lo) <= tol && (hi - lo) <= 1e-13 * hi) break;
    const double mid = wide ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int s = sign_at(mid);
    if (s == 0) {
      lo = hi = mid;
      break;
    }
    (s == s_lo ? lo : hi) = mid;
  }
  const double d = 0.5 * (lo + hi);
  auto zb = std::minmax(mp1 - sd * lo, mp1 - sd * hi);
  return finish(sd * d, {zb.first, zb.second});
}

/// M(a0, b0; 2 sqrt|E| r) e^{-sqrt|E| r}, the radial eigenfunction profile.
inline double radial_eigenfunction(double z, double E, double r, const BallProblem& prob,
                                   const SeriesControl& ctrl = {}) {
  if (!(z > 0.0) || !(E < 0.0)) throw DomainError("radial_eigenfunction: need z > 0 and E < 0");
  if (!(r >= 0.0)) throw DomainError("radial_eigenfunction: r must be non-negative");
  const double k = std::sqrt(-E);
  if (std::fabs(z - prob.kappa() / (2.0 * k)) > 1e-10 * z)
    throw DomainError("radial_eigenfunction: z and E are inconsistent");
  const ScaledReal M = kummer_m(prob.m() + 1.0 - z, prob.b0(), 2.0 * k * r, ctrl);
  if (M.is_zero()) return 0.0;
  const double log_mag = M.log_mag - k * r;
  if (log_mag < ScaledReal::kMinLog) return 0.0;
  return ScaledReal::from_log(M.sign, log_mag).to_double();
}

// ---------------------------------------------------------------------------
// Shooting oracle

namespace detail {

using RadialState = std::array<double, 2>;

// Boundary residual of the radial ODE at r = R for energy E. The solution is
// launched on the regular Frobenius branch v = r^{m+1} sum_j c_j r^j (divided
// by r0^{m+1}) and rescaled between chunks so that it never overflows.
inline double shooting_residual(const BallProblem& p, double E, double rel_tol) {
  const double m = p.m();
  const double kappa = p.kappa();
  const double R = p.R();
  const double r0 = 1e-6 * R;

  std::array<double, 8> c{};
  c[0] = 1.0;
  for (int j = 1; j < 8; ++j) {
    const double prev2 = j >= 2 ? c[j - 2] : 0.0;
    c[j] = -(kappa * c[j - 1] + E * prev2) / (j * (j + 2.0 * m + 1.0));
  }
  RadialState y{0.0, 0.0};
  for (int j = 0; j < 8; ++j) {
    y[0] += c[j] * std::pow(r0, j);
    y[1] += c[j] * (j + m + 1.0) * std::pow(r0, j - 1);
  }

  const double mm1 = m * (m + 1.0);
  auto rhs = [&](const RadialState& s, RadialState& ds, double r) {
    ds[0] = s[1];
    ds[1] = (mm1 / (r * r) - kappa / r - E) * s[0];
  };

  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled(1e-14, rel_tol, odeint::runge_kutta_dopri5<RadialState>());
  constexpr int kChunks = 64;
  double r = r0;
  double dt = 1e-3 * r0;
  for (int k = 1; k <= kChunks; ++k) {
    // Chunks are geometric near the origin and uniform further out.
    const double frac = static_cast<double>(k) / kChunks;
    const double target = k == kChunks ? R : r0 + (R - r0) * frac * frac;
    try {
      odeint::integrate_adaptive(stepper, rhs, y, r, target, dt);
    } catch (const std::exception& e) {
      throw ConvergenceError(std::string("shooting: step-size control failed: ") + e.what());
    }
    r = target;
    dt = std::max(1e-6 * (R - r0) / kChunks, 1e-3 * r);
    const double scale = std::max(std::fabs(y[0]), std::fabs(y[1]));
    if (!std::isfinite(scale)) throw ConvergenceError("shooting: solution overflowed");
    if (scale > 1e100 || (scale < 1e-100 && scale > 0.0)) {
      y[0] /= scale;
      y[1] /= scale;
    }
  }
  if (p.dirichlet()) return y[0];
  return y[1] + (p.gamma() - (m + 1.0) / R) * y[0];
}

}  // namespace detail

/// Bisects E in [E_lo, E_hi] on the sign of the boundary residual of the radial ODE.
inline double shooting_oracle(const BallProblem& prob, double E_lo, double E_hi, double tol,
                              double rel_tol = 1e-12) {
  if (!prob.finite_radius()) throw DomainError("shooting_oracle: R must be finite");
  if (!(E_lo < E_hi)) throw DomainError("shooting_oracle: need E_lo < E_hi");
  double f_lo = detail::shooting_residual(prob, E_lo, rel_tol);
  const double f_hi = detail::shooting_residual(prob, E_hi, rel_tol);
  if ((f_lo > 0) == (f_hi > 0) || f_lo == 0.0 || f_hi == 0.0) {
    if (f_lo == 0.0) return E_lo;
    if (f_hi == 0.0) return E_hi;
    throw BracketError("shooting_oracle: no sign change of the boundary residual over [" +
                       std::to_string(E_lo) + ", " + std::to_string(E_hi) + "]");
  }
  double lo = E_lo, hi = E_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = detail::shooting_residual(prob, mid, rel_tol);
    if (f == 0.0) return mid;
    if ((f > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Ground energy from shooting alone: scans E upward from a safe lower bound to
/// the first sign change of the boundary residual, then bisects.
inline double shooting_ground_state(const BallProblem& prob, double tol = 1e-12) {
  const double gneg = prob.dirichlet() ? 0.0 : std::max(0.0, -prob.gamma());
  double E_lo = -std::pow(2.0 * prob.kappa() / (prob.n() - 1) + 2.0 * gneg + (prob.n() + 1.0) / prob.R(), 2) - 1.0;
  double f_lo = detail::shooting_residual(prob, E_lo, 1e-12);
  for (int i = 0; i < 20 && !(f_lo > 0.0); ++i) {
    E_lo *= 4.0;
    f_lo = detail::shooting_residual(prob, E_lo, 1e-12);
  }
  if (!(f_lo > 0.0)) throw BracketError("shooting_ground_state: could not bracket from below");
  const double E_max = std::pow((prob.n() + 2.0) * 3.14159265358979 / prob.R(), 2) + prob.kappa();
  constexpr int kSteps = 800;
  double prev = E_lo;
  for (int i = 1; i <= kSteps; ++i) {
    const double E = E_lo + (E_max - E_lo) * i / kSteps;
    const double f = detail::shooting_residual(prob, E, 1e-12);
    if (!(f > 0.0)) return shooting_oracle(prob, prev, E, tol);
    prev = E;
  }
  throw BracketError("shooting_ground_state: no eigenvalue below the scan ceiling");
}

/// Ground energies over R_list and a least-squares fit of log|E - E_limit| against R.
///
/// Rows are returned in R order. Only rows with abs_err > kConvergenceFloor enter the fit.
inline ConvergenceStudy convergence_study(double kappa, double gamma, int n,
                                          const std::vector<double>& R_list, double tol = 1e-12) {
  if (R_list.size() < 4) throw DomainError("convergence_study: need at least 4 radii");
  for (std::size_t i = 1; i < R_list.size(); ++i)
    if (!(R_list[i] >= R_list[i - 1]))
      throw DomainError("convergence_study: R_list must be non-decreasing");

  const BallProblem base(R_list.front(), kappa, gamma, n);
  ConvergenceStudy out;
  out.rows = parallel_map(R_list.size(), [&](std::size_t i) {
    const BallProblem p = base.with_radius(R_list[i]);
    const ModeSolution s = ground_state_z(p, tol);
    ConvergenceRow row;
    row.R = R_list[i];
    row.z = s.z;
    row.E = s.E;
    row.E_limit = p.limit_energy();
    row.abs_err = s.limit_deviation(kappa, p.m());
    return row;
  });

  std::vector<double> xs, ys;
  for (const auto& row : out.rows) {
    if (row.abs_err > kConvergenceFloor) {
      xs.push_back(row.R);
      ys.push_back(std::log(row.abs_err));
    }
  }
  out.fit = fit_line(xs, ys);
  return out;
}

}  // namespace robin_gap
