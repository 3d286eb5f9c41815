#pragma once

// Lowest eigenpairs of the symmetric pencil A u = lambda M u (M positive definite).
//
// Small problems use a dense generalized solver. Larger ones use Lanczos on
// (A - sigma M)^{-1} M in the M inner product with full reorthogonalization.
// The shift sigma is placed just below lambda_1 by inertia counts of
// LDL^T(A - sigma M), and the final set is checked against the inertia count
// so that missed copies of clustered eigenvalues are picked up by a deflated rerun.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "robin_gap/error.hpp"
#include "robin_gap/fem_assembly.hpp"

namespace robin_gap {

struct EigenOptions {
  int k = 2;
  double tol = 1e-10;                 // relative residual per pair
  Eigen::Index dense_threshold = 400;
  std::optional<double> shift_hint;   // rough location of lambda_1, e.g. from a coarser mesh
  int max_restarts = 8;
};

struct EigenResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // M-orthonormal columns
  double max_residual = 0.0;
  std::string method;
  int factorizations = 0;
};

/// Largest absolute column sum.
inline double norm_1(const SparseMatrix& A) {
  double best = 0.0;
  for (int col = 0; col < A.outerSize(); ++col) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(A, col); it; ++it) s += std::fabs(it.value());
    best = std::max(best, s);
  }
  return best;
}

/// Backward error ||A u - lambda M u|| / ((||A||_1 + |lambda| ||M||_1) ||u||).
inline double relative_residual(const SparseMatrix& A, const SparseMatrix& M, const Eigen::VectorXd& u, double lambda) {
  const double denom = (norm_1(A) + std::fabs(lambda) * norm_1(M)) * u.norm();
  return denom > 0.0 ? (A * u - lambda * (M * u)).norm() / denom : 0.0;
}

namespace detail {

class ShiftedFactor {
 public:
  ShiftedFactor(const SparseMatrix& A, const SparseMatrix& M) : A_(A), M_(M) {
    solver_.analyzePattern(A_ - M_);
  }

  // Number of eigenvalues below sigma (Sylvester inertia), or -1 if the factorization failed.
  int factor(double sigma) {
    ++count_;
    sigma_ = sigma;
    solver_.factorize(A_ - sigma * M_);
    if (solver_.info() != Eigen::Success) return -1;
    const Eigen::VectorXd& D = solver_.vectorD();
    int neg = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      if (!std::isfinite(D[i]) || D[i] == 0.0) return -1;
      if (D[i] < 0.0) ++neg;
    }
    return neg;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return solver_.solve(M_ * x); }
  double sigma() const { return sigma_; }
  int factorizations() const { return count_; }

 private:
  const SparseMatrix& A_;
  const SparseMatrix& M_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> solver_;
  double sigma_ = 0.0;
  int count_ = 0;
};

// Count at sigma, nudging it when the factorization hits an exact zero pivot.
inline int robust_count(ShiftedFactor& f, double& sigma, double scale) {
  for (int i = 0; i < 8; ++i) {
    const int c = f.factor(sigma);
    if (c >= 0) return c;
    sigma -= 1e-9 * scale * (i + 1);
  }
  throw ConvergenceError("solve_lowest: shifted factorization failed repeatedly");
}

// Places the factorization at a shift strictly below lambda_1 and within a few
// percent of it.
inline void place_shift(ShiftedFactor& f, double hint) {
  const double scale = std::max(1.0, std::fabs(hint));
  // Fast path: hint already within 2% below lambda_1.
  {
    double above = hint + 0.02 * scale;
    if (robust_count(f, above, scale) > 0) {
      double at = hint;
      if (robust_count(f, at, scale) == 0) return;
    }
  }
  double step = 0.05 * scale;
  double sigma = hint;
  int c = robust_count(f, sigma, scale);
  double lo, hi;
  if (c == 0) {
    lo = sigma;
    for (;;) {
      double s = lo + step;
      const int cs = robust_count(f, s, scale);
      if (cs > 0) {
        hi = s;
        break;
      }
      lo = s;
      step *= 2.0;
      if (step > 1e12 * scale) throw ConvergenceError("solve_lowest: no eigenvalue found above the shift hint");
    }
  } else {
    hi = sigma;
    for (;;) {
      double s = hi - step;
      const int cs = robust_count(f, s, scale);
      if (cs == 0) {
        lo = s;
        break;
      }
      hi = s;
      step *= 2.0;
      if (step > 1e12 * scale) throw ConvergenceError("solve_lowest: could not find a shift below the spectrum");
    }
  }
  while (hi - lo > 0.02 * std::max(1.0, std::fabs(hi))) {
    double mid = 0.5 * (lo + hi);
    const int cm = robust_count(f, mid, scale);
    (cm == 0 ? lo : hi) = mid;
  }
  if (f.sigma() != lo) {
    double s = lo;
    if (robust_count(f, s, scale) != 0) throw ConvergenceError("solve_lowest: inertia changed at the chosen shift");
  }
}

struct RitzPairs {
  std::vector<double> values;
  std::vector<Eigen::VectorXd> vectors;
};

inline double m_dot(const SparseMatrix& M, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(M * b);
}

// Lanczos for the wanted largest eigenvalues of (A - sigma M)^{-1} M, M-orthogonal to `locked`.
inline RitzPairs lanczos(const ShiftedFactor& f, const SparseMatrix& A, const SparseMatrix& M,
                         const std::vector<Eigen::VectorXd>& locked, int wanted, double tol, int max_restarts,
                         std::mt19937_64& rng) {
  const Eigen::Index n = M.rows();
  const Eigen::Index free_dim = n - static_cast<Eigen::Index>(locked.size());
  if (wanted > free_dim) wanted = static_cast<int>(free_dim);
  std::vector<Eigen::VectorXd> lockedM;
  for (const auto& x : locked) lockedM.push_back(M * x);
  auto deflate = [&](Eigen::VectorXd& w) {
    for (std::size_t i = 0; i < locked.size(); ++i) w -= lockedM[i].dot(w) * locked[i];
  };

  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * uni(rng);

  const Eigen::Index max_dim = std::min<Eigen::Index>(free_dim, 2000);
  Eigen::Index dim = std::min<Eigen::Index>(free_dim, std::max(2 * wanted + 20, 30));
  for (int restart = 0; restart <= max_restarts; ++restart) {
    std::vector<Eigen::VectorXd> Q, MQ;
    std::vector<double> alpha, beta;
    Eigen::VectorXd q = start;
    deflate(q);
    q /= std::sqrt(m_dot(M, q, q));
    for (Eigen::Index j = 0; j < dim; ++j) {
      Q.push_back(q);
      MQ.push_back(M * q);
      Eigen::VectorXd w = f.apply(q);
      deflate(w);
      const double a = MQ.back().dot(w);
      alpha.push_back(a);
      // Classical Gram-Schmidt, twice, in the M inner product.
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::VectorXd c(Q.size());
        for (std::size_t i = 0; i < Q.size(); ++i) c[i] = MQ[i].dot(w);
        for (std::size_t i = 0; i < Q.size(); ++i) w -= c[i] * Q[i];
        deflate(w);
      }
      const double b = std::sqrt(std::max(0.0, m_dot(M, w, w)));
      if (b <= 1e-13 * std::fabs(a) || j + 1 == dim) {
        beta.push_back(b);
        break;
      }
      beta.push_back(b);
      q = w / b;
    }

    const Eigen::Index m = static_cast<Eigen::Index>(Q.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    // Largest theta first.
    RitzPairs out;
    bool all_ok = true;
    const int take = std::min<int>(wanted, static_cast<int>(m));
    Eigen::VectorXd next_start = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < take; ++i) {
      const Eigen::Index col = m - 1 - i;
      const double theta = es.eigenvalues()[col];
      if (!(theta > 0.0)) {
        all_ok = false;
        break;
      }
      Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
      for (Eigen::Index r = 0; r < m; ++r) u += es.eigenvectors()(r, col) * Q[r];
      u /= std::sqrt(m_dot(M, u, u));
      const double lambda = f.sigma() + 1.0 / theta;
      const double res = relative_residual(A, M, u, lambda);
      next_start += u;
      if (res > tol) {
        all_ok = false;
        continue;
      }
      out.values.push_back(lambda);
      out.vectors.push_back(std::move(u));
    }
    if (all_ok && static_cast<int>(out.values.size()) == take) return out;
    // A single start vector sees one copy of a multiple eigenvalue; hand back what
    // converged so the caller can lock it and search the deflated space.
    if (!out.values.empty() && restart > 0) return out;
    if (dim >= max_dim) {
      if (dim == free_dim && static_cast<int>(out.values.size()) == take) return out;  // the whole space was spanned
      throw ConvergenceError("solve_lowest: Lanczos reached " + std::to_string(dim) +
                             " vectors without meeting tolerance " + std::to_string(tol));
    }
    dim = std::min(max_dim, 2 * dim);
    start = next_start + 1e-3 * start;
  }
  throw ConvergenceError("solve_lowest: Lanczos did not converge to tolerance " + std::to_string(tol));
}

}  // namespace detail

/// The k algebraically smallest eigenpairs of A u = lambda M u.
inline EigenResult solve_pencil(const SparseMatrix& A, const SparseMatrix& M, const EigenOptions& opt) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || M.rows() != n || M.cols() != n) throw DomainError("solve_pencil: matrix sizes differ");
  if (opt.k < 1 || opt.k > n) throw DomainError("solve_pencil: k must lie in [1, n]");
  if (!(opt.tol > 0.0)) throw DomainError("solve_pencil: tol must be positive");

  EigenResult r;
  if (n < opt.dense_threshold) {
    const Eigen::MatrixXd Ad(A), Md(M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ad, Md);
    if (es.info() != Eigen::Success) throw ConvergenceError("solve_pencil: dense generalized solver failed");
    r.values = es.eigenvalues().head(opt.k);
    r.vectors = es.eigenvectors().leftCols(opt.k);
    r.method = "dense";
  } else {
    detail::ShiftedFactor f(A, M);
    detail::place_shift(f, opt.shift_hint.value_or(0.0));
    std::mt19937_64 rng(0x5eedULL);
    std::vector<double> vals;
    std::vector<Eigen::VectorXd> vecs;
    int wanted = opt.k;
    for (int round = 0; round < 6; ++round) {
      auto pairs = detail::lanczos(f, A, M, vecs, wanted, opt.tol, opt.max_restarts, rng);
      for (std::size_t i = 0; i < pairs.values.size(); ++i) {
        vals.push_back(pairs.values[i]);
        vecs.push_back(std::move(pairs.vectors[i]));
      }
      std::vector<std::size_t> order(vals.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
      std::vector<double> v2;
      std::vector<Eigen::VectorXd> x2;
      for (std::size_t i : order) {
        v2.push_back(vals[i]);
        x2.push_back(std::move(vecs[i]));
      }
      vals = std::move(v2);
      vecs = std::move(x2);
      if (static_cast<int>(vals.size()) < opt.k) {
        wanted = opt.k - static_cast<int>(vals.size());
        continue;
      }
      // Every eigenvalue at or below the k-th must have been found.
      const double top = vals[opt.k - 1];
      double probe = top + 1e-7 * std::max(1.0, std::fabs(top));
      // f has served its Lanczos runs; refactor it at the probe, relocating if more pairs are needed.
      const int below = detail::robust_count(f, probe, std::max(1.0, std::fabs(top)));
      const int found = static_cast<int>(std::count_if(vals.begin(), vals.end(), [&](double v) { return v < probe; }));
      if (below <= found) break;
      wanted = below - found;
      detail::place_shift(f, vals.front() - 0.01 * std::max(1.0, std::fabs(vals.front())));
      if (round == 5) throw ConvergenceError("solve_pencil: eigenvalue count does not match inertia");
    }
    if (static_cast<int>(vals.size()) < opt.k) throw ConvergenceError("solve_pencil: fewer eigenpairs converged than requested");
    r.values.resize(opt.k);
    r.vectors.resize(n, opt.k);
    for (int i = 0; i < opt.k; ++i) {
      r.values[i] = vals[i];
      r.vectors.col(i) = vecs[i];
    }
    r.method = "shift-invert-lanczos";
    r.factorizations += f.factorizations();
  }
  for (int i = 0; i < opt.k; ++i)
    r.max_residual = std::max(r.max_residual, relative_residual(A, M, r.vectors.col(i), r.values[i]));
  return r;
}

/// Lowest k eigenvalues of (stiffness + alpha boundary_mass) u = lambda mass u.
inline Eigen::VectorXd solve_lowest(const SparseMatrix& stiffness, const SparseMatrix& mass,
                                    const SparseMatrix& boundary_mass, double alpha, int k, double tol = 1e-10) {
  EigenOptions opt;
  opt.k = k;
  opt.tol = tol;
  return solve_pencil(stiffness + alpha * boundary_mass, mass, opt).values;
}

}  // namespace robin_gap
