#pragma once

// Lowest Robin eigenvalues of x-symmetric convex polygons, on the half domain
// (even class: Neumann on x = 0, odd class: Dirichlet on x = 0) or on the
// mirrored full mesh, with Richardson extrapolation over nested refinements.
// Also the exact spectrum of the interval.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robin_gap/eigensolver.hpp"
#include "robin_gap/fem_assembly.hpp"
#include "robin_gap/geometry.hpp"
#include "robin_gap/mesh.hpp"

namespace robin_gap {

enum class Parity { Even, Odd, Unknown };

inline const char* parity_name(Parity p) {
  switch (p) {
    case Parity::Even: return "even";
    case Parity::Odd: return "odd";
    default: return "unknown";
  }
}

struct SpectrumOptions {
  int k = 2;
  bool half_domain = true;
  bool graded = false;
  GradingOptions grading;
  double tol = 1e-10;
  Eigen::Index dense_threshold = 400;
  // lambda_2 and lambda_3 closer than this (relative to max(1, |lambda_2|)) count as one degenerate pair
  double degeneracy_tol = 5e-3;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;  // ascending, lowest k
  std::vector<Parity> parities;     // per eigenvalue
  double gap = 0.0;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.0;
  double h = 0.0;
  Parity parity_of_second = Parity::Unknown;
  std::size_t dofs = 0;
  double max_residual = 0.0;
  std::string method;
  // Lowest eigenvalues per class (half-domain runs only).
  std::vector<double> even;
  std::vector<double> odd;
};

namespace detail {

inline Parity second_parity(const std::vector<double>& ev, const std::vector<Parity>& par, double degeneracy_tol) {
  if (ev.size() < 2) return Parity::Unknown;
  if (ev.size() >= 3 && std::fabs(ev[2] - ev[1]) <= degeneracy_tol * std::max(1.0, std::fabs(ev[1]))) {
    if (par[1] == Parity::Odd || par[2] == Parity::Odd) return Parity::Odd;
    return par[1] == par[2] ? par[1] : Parity::Unknown;
  }
  return par[1];
}

inline std::vector<int> nodes_off_symmetry(const TriMesh& mesh) {
  std::vector<char> on(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary)
    if (e.kind == EdgeKind::Symmetry) on[e.a] = on[e.b] = 1;
  std::vector<int> keep;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (!on[i]) keep.push_back(static_cast<int>(i));
  return keep;
}

struct ClassHints {
  std::optional<double> even, odd;
};

}  // namespace detail

/// Spectrum on a mesh of the right half {x >= 0} whose cut edge is tagged Symmetry.
inline SpectrumResult spectrum_half_mesh(const TriMesh& half, double alpha, const SpectrumOptions& opt,
                                         const detail::ClassHints& hints = {}) {
  if (opt.k < 2) throw DomainError("robin_spectrum: k must be >= 2");
  const FemMatrices fm = assemble(half);
  const SparseMatrix A = fm.robin_operator(alpha);
  const int per_class = opt.k + 1;

  EigenOptions eo;
  eo.tol = opt.tol;
  eo.dense_threshold = opt.dense_threshold;
  eo.k = std::min<int>(per_class, static_cast<int>(A.rows()));
  eo.shift_hint = hints.even;
  const EigenResult even = solve_pencil(A, fm.mass, eo);

  const std::vector<int> keep = detail::nodes_off_symmetry(half);
  const SparseMatrix Ao = restrict_dofs(A, keep), Mo = restrict_dofs(fm.mass, keep);
  eo.k = std::min<int>(per_class, static_cast<int>(Ao.rows()));
  eo.shift_hint = hints.odd;
  const EigenResult odd = solve_pencil(Ao, Mo, eo);

  SpectrumResult r;
  r.alpha = alpha;
  r.h = half.h;
  r.dofs = static_cast<std::size_t>(A.rows());
  r.method = even.method;
  r.max_residual = std::max(even.max_residual, odd.max_residual);
  std::vector<std::pair<double, Parity>> all;
  for (Eigen::Index i = 0; i < even.values.size(); ++i) {
    r.even.push_back(even.values[i]);
    all.emplace_back(even.values[i], Parity::Even);
  }
  for (Eigen::Index i = 0; i < odd.values.size(); ++i) {
    r.odd.push_back(odd.values[i]);
    all.emplace_back(odd.values[i], Parity::Odd);
  }
  // Exact ties go to the odd member.
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second == Parity::Odd && b.second != Parity::Odd;
  });
  for (const auto& [v, p] : all) {
    r.eigenvalues.push_back(v);
    r.parities.push_back(p);
  }
  r.parity_of_second = detail::second_parity(r.eigenvalues, r.parities, opt.degeneracy_tol);
  r.eigenvalues.resize(opt.k);
  r.parities.resize(opt.k);
  r.gap = r.eigenvalues[1] - r.eigenvalues[0];
  return r;
}

/// Spectrum on an x-symmetric full mesh, classifying eigenvectors by their
/// correlation with the reflected vector.
inline SpectrumResult spectrum_full_mesh(const MirroredMesh& full, double alpha, const SpectrumOptions& opt,
                                         std::optional<double> hint = {}) {
  if (opt.k < 2) throw DomainError("robin_spectrum: k must be >= 2");
  const FemMatrices fm = assemble(full.mesh);
  const SparseMatrix A = fm.robin_operator(alpha);
  EigenOptions eo;
  eo.tol = opt.tol;
  eo.dense_threshold = opt.dense_threshold;
  eo.k = std::min<int>(opt.k + 1, static_cast<int>(A.rows()));
  eo.shift_hint = hint;
  const EigenResult er = solve_pencil(A, fm.mass, eo);

  const Eigen::Index n = A.rows();
  auto reflect = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u[full.mirror[i]];
    return v;
  };
  SpectrumResult r;
  r.alpha = alpha;
  r.h = full.mesh.h;
  r.dofs = static_cast<std::size_t>(n);
  r.method = er.method;
  r.max_residual = er.max_residual;
  for (Eigen::Index i = 0; i < er.values.size(); ++i) {
    const Eigen::VectorXd u = er.vectors.col(i);
    const double c = u.dot(fm.mass * reflect(u));  // u is M-normalized
    r.eigenvalues.push_back(er.values[i]);
    r.parities.push_back(c > 0.9 ? Parity::Even : (c < -0.9 ? Parity::Odd : Parity::Unknown));
  }
  // A near-degenerate (lambda_2, lambda_3) pair may come back as any rotation;
  // diagonalize the reflection on the pair to see whether an odd member exists.
  r.parity_of_second = r.parities.size() > 1 ? r.parities[1] : Parity::Unknown;
  if (er.values.size() >= 3 &&
      std::fabs(er.values[2] - er.values[1]) <= opt.degeneracy_tol * std::max(1.0, std::fabs(er.values[1]))) {
    const Eigen::VectorXd u = er.vectors.col(1), v = er.vectors.col(2);
    Eigen::Matrix2d P;
    P(0, 0) = u.dot(fm.mass * reflect(u));
    P(1, 1) = v.dot(fm.mass * reflect(v));
    P(0, 1) = P(1, 0) = 0.5 * (u.dot(fm.mass * reflect(v)) + v.dot(fm.mass * reflect(u)));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(P);
    if (es.eigenvalues()[0] < -0.9)
      r.parity_of_second = Parity::Odd;
    else if (es.eigenvalues()[0] > 0.9)
      r.parity_of_second = Parity::Even;
    else
      r.parity_of_second = Parity::Unknown;
  }
  r.eigenvalues.resize(opt.k);
  r.parities.resize(opt.k);
  r.gap = r.eigenvalues[1] - r.eigenvalues[0];
  return r;
}

/// Half-domain base mesh for an x-symmetric polygon.
inline TriMesh half_domain_mesh(const PolygonDomain& poly, double target_h, const SpectrumOptions& opt) {
  if (!poly.symmetric_in_x()) throw DomainError("robin_spectrum: domain must be symmetric in x");
  return triangulate(right_half(poly), target_h, opt.graded, opt.grading);
}

inline SpectrumResult robin_spectrum_on(const PolygonDomain& poly, double alpha, double target_h,
                                        const SpectrumOptions& opt = {}) {
  const TriMesh half = half_domain_mesh(poly, target_h, opt);
  return opt.half_domain ? spectrum_half_mesh(half, alpha, opt) : spectrum_full_mesh(mirror_x(half), alpha, opt);
}

/// Lowest k Robin eigenvalues of the double cone of opening angle theta.
inline SpectrumResult robin_spectrum(double theta, double alpha, double target_h, int k, bool use_half_domain,
                                     SpectrumOptions opt = {}) {
  opt.k = k;
  opt.half_domain = use_half_domain;
  SpectrumResult r = robin_spectrum_on(build_double_cone(theta), alpha, target_h, opt);
  r.theta = theta;
  return r;
}

// ---------------------------------------------------------------------------
// Richardson extrapolation over nested uniform refinements

struct ExtrapolatedSpectrum {
  std::vector<SpectrumResult> levels;  // coarse to fine
  std::vector<double> eigenvalues;     // extrapolated, ascending
  std::vector<double> errors;          // estimated error per extrapolated eigenvalue
  std::vector<Parity> parities;
  double gap = 0.0;
  double gap_error = 0.0;
  Parity parity_of_second = Parity::Unknown;
  double theta = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.0;

  /// Larger of the error estimates for lambda_1 and lambda_2.
  double discretization_error() const { return std::max(errors.at(0), errors.at(1)); }
};

inline double richardson(double coarse, double fine) { return (4.0 * fine - coarse) / 3.0; }

namespace detail {

// Extrapolated value and error estimate from a sequence on meshes h, h/2, h/4, ...
inline std::pair<double, double> extrapolate_sequence(const std::vector<double>& seq) {
  const std::size_t L = seq.size();
  const double R = richardson(seq[L - 2], seq[L - 1]);
  if (L >= 3) return {R, std::fabs(R - richardson(seq[L - 3], seq[L - 2]))};
  return {R, std::fabs(R - seq[L - 1])};
}

}  // namespace detail

namespace detail {

// Extrapolation of the per-level spectra gathered so far.
inline ExtrapolatedSpectrum combine_levels(const std::vector<SpectrumResult>& levels, double alpha,
                                           const SpectrumOptions& opt) {
  ExtrapolatedSpectrum out;
  out.alpha = alpha;
  out.levels = levels;
  std::vector<std::pair<double, double>> ext;  // value, error
  std::vector<Parity> par;
  auto column = [&](auto get, std::size_t count) {
    for (std::size_t j = 0; j < count; ++j) {
      std::vector<double> seq;
      for (const auto& lv : out.levels) seq.push_back(get(lv)[j]);
      ext.push_back(extrapolate_sequence(seq));
    }
  };
  if (opt.half_domain) {
    const std::size_t ne = out.levels.back().even.size(), no = out.levels.back().odd.size();
    column([](const SpectrumResult& r) { return r.even; }, ne);
    par.assign(ne, Parity::Even);
    column([](const SpectrumResult& r) { return r.odd; }, no);
    par.insert(par.end(), no, Parity::Odd);
  } else {
    const std::size_t nk = out.levels.back().eigenvalues.size();
    column([](const SpectrumResult& r) { return r.eigenvalues; }, nk);
    par = out.levels.back().parities;
  }
  std::vector<std::size_t> order(ext.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ext[a].first != ext[b].first) return ext[a].first < ext[b].first;
    return par[a] == Parity::Odd && par[b] != Parity::Odd;
  });
  for (std::size_t i : order) {
    out.eigenvalues.push_back(ext[i].first);
    out.errors.push_back(ext[i].second);
    out.parities.push_back(par[i]);
  }
  if (opt.half_domain)
    out.parity_of_second = second_parity(out.eigenvalues, out.parities, opt.degeneracy_tol);
  else
    out.parity_of_second = out.levels.back().parity_of_second;
  const std::size_t k = static_cast<std::size_t>(opt.k);
  out.eigenvalues.resize(std::min(k, out.eigenvalues.size()));
  out.errors.resize(out.eigenvalues.size());
  out.parities.resize(out.eigenvalues.size());
  out.gap = out.eigenvalues[1] - out.eigenvalues[0];

  // Error of the extrapolated gap from the gap sequence itself (differences cancel part of the error).
  if (out.levels.size() >= 3) {
    std::vector<double> g;
    for (const auto& lv : out.levels) g.push_back(lv.eigenvalues[1] - lv.eigenvalues[0]);
    out.gap_error = extrapolate_sequence(g).second;
  } else {
    out.gap_error = out.errors[0] + out.errors[1];
  }
  return out;
}

}  // namespace detail

/// Stops refining once `done` accepts the extrapolation.
using RefinementPredicate = std::function<bool(const ExtrapolatedSpectrum&)>;

/// Spectra on nested meshes (base target_h, then uniform refinement) and their
/// Richardson extrapolation in h^2. At least min_levels and at most max_levels
/// meshes are used; in between, refinement stops as soon as `done` returns true.
/// On the half domain each parity class is extrapolated separately before the
/// classes are merged.
inline ExtrapolatedSpectrum robin_spectrum_refined_on(const PolygonDomain& poly, double alpha, double target_h,
                                                      int min_levels, int max_levels, const SpectrumOptions& opt = {},
                                                      const RefinementPredicate& done = {}) {
  if (min_levels < 2) throw DomainError("robin_spectrum_extrapolated: need at least 2 levels");
  if (max_levels < min_levels) throw DomainError("robin_spectrum_extrapolated: max_levels below min_levels");
  std::vector<SpectrumResult> levels;
  TriMesh half = half_domain_mesh(poly, target_h, opt);
  detail::ClassHints hints;
  std::optional<double> full_hint;
  for (int l = 0; l < max_levels; ++l) {
    if (l > 0) half = refine_uniform(half);
    SpectrumResult r = opt.half_domain ? spectrum_half_mesh(half, alpha, opt, hints)
                                       : spectrum_full_mesh(mirror_x(half), alpha, opt, full_hint);
    // The next level's lambda_1 lies above the Richardson value of the last two levels.
    auto next_hint = [&](auto get) {
      const double cur = get(r).front();
      if (levels.empty()) return cur;
      const double prev = get(levels.back()).front();
      return richardson(prev, cur) - 0.1 * std::fabs(prev - cur);
    };
    if (opt.half_domain) {
      hints.even = next_hint([](const SpectrumResult& s) { return s.even; });
      hints.odd = next_hint([](const SpectrumResult& s) { return s.odd; });
    } else {
      full_hint = next_hint([](const SpectrumResult& s) { return s.eigenvalues; });
    }
    levels.push_back(std::move(r));
    if (l + 1 >= min_levels) {
      ExtrapolatedSpectrum e = detail::combine_levels(levels, alpha, opt);
      if (l + 1 == max_levels || (done && done(e))) return e;
    }
  }
  throw ConvergenceError("robin_spectrum_extrapolated: unreachable");
}

inline ExtrapolatedSpectrum robin_spectrum_extrapolated_on(const PolygonDomain& poly, double alpha, double target_h,
                                                           int levels, const SpectrumOptions& opt = {}) {
  return robin_spectrum_refined_on(poly, alpha, target_h, levels, levels, opt);
}

inline ExtrapolatedSpectrum robin_spectrum_extrapolated(double theta, double alpha, double target_h, int k,
                                                        bool use_half_domain, int levels = 3,
                                                        SpectrumOptions opt = {}) {
  opt.k = k;
  opt.half_domain = use_half_domain;
  ExtrapolatedSpectrum r = robin_spectrum_extrapolated_on(build_double_cone(theta), alpha, target_h, levels, opt);
  r.theta = theta;
  for (auto& lv : r.levels) lv.theta = theta;
  return r;
}

// ---------------------------------------------------------------------------
// Interval

namespace detail {

// cos-type and sin-type solutions of -u'' = lambda u, entire in lambda.
inline double interval_C(double lambda, double x) {
  if (lambda > 0.0) return std::cos(std::sqrt(lambda) * x);
  if (lambda < 0.0) return std::cosh(std::sqrt(-lambda) * x);
  return 1.0;
}

inline double interval_S(double lambda, double x) {
  if (lambda > 0.0) {
    const double k = std::sqrt(lambda);
    return std::sin(k * x) / k;
  }
  if (lambda < 0.0) {
    const double m = std::sqrt(-lambda);
    return std::sinh(m * x) / m;
  }
  return x;
}

// u'(h) + alpha u(h) for the even (u = C) and odd (u = S) solutions.
inline double interval_even_residual(double lambda, double h, double alpha) {
  return -lambda * interval_S(lambda, h) + alpha * interval_C(lambda, h);
}

inline double interval_odd_residual(double lambda, double h, double alpha) {
  return interval_C(lambda, h) + alpha * interval_S(lambda, h);
}

template <class F>
double first_root(F f, double lo, double hi, int steps) {
  double a = lo, fa = f(a);
  if (fa == 0.0) return a;
  for (int i = 1; i <= steps; ++i) {
    double b = lo + (hi - lo) * i / steps;
    const double fb = f(b);
    if (fb == 0.0) return b;
    if ((fa > 0) != (fb > 0)) {
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm > 0) == (fa > 0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    a = b;
    fa = fb;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Two lowest eigenvalues of -u'' = lambda u on (-L/2, L/2) with u' nu + alpha u = 0 at both ends.
/// Eigenvalues alternate in parity, so they are the lowest even and the lowest odd root.
inline std::pair<double, double> interval_spectrum(double length, double alpha) {
  if (!(length > 0.0)) throw DomainError("interval_spectrum: length must be positive");
  if (!std::isfinite(alpha)) throw DomainError("interval_spectrum: alpha must be finite");
  const double h = 0.5 * length;
  // Negative eigenvalues -mu^2 satisfy mu <= |alpha| / tanh(|alpha| h), which gives the scan floor.
  const double a = std::fabs(alpha);
  const double mu_max = a > 0.0 ? a / std::tanh(a * h) : 0.0;
  double lo = -std::pow(mu_max + 1.0, 2) - 1.0;
  double hi = std::pow(2.0 * std::numbers::pi / length, 2) + 1.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int steps = 4000;
    const double e = detail::first_root([&](double l) { return detail::interval_even_residual(l, h, alpha); }, lo, hi, steps);
    const double o = detail::first_root([&](double l) { return detail::interval_odd_residual(l, h, alpha); }, lo, hi, steps);
    if (std::isfinite(e) && std::isfinite(o)) return {std::min(e, o), std::max(e, o)};
    lo = 4.0 * lo;
    hi = 4.0 * hi;
  }
  throw BracketError("interval_spectrum: no sign change found in the scan range");
}

}  // namespace robin_gap
