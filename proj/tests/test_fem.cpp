#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "robin_gap/cone_analytics.hpp"
#include "robin_gap/robin_spectrum.hpp"

using namespace robin_gap;
using std::numbers::pi;

namespace {

bool has_vertex(const PolygonDomain& p, double x, double y) {
  return std::any_of(p.vertices.begin(), p.vertices.end(),
                     [&](Point q) { return std::fabs(q.x - x) < 1e-14 && std::fabs(q.y - y) < 1e-14; });
}

double sum_all(const SparseMatrix& A) {
  double s = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) s += it.value();
  return s;
}

// Number of eigenvalues below x of the symmetric tridiagonal matrix (d, e), by Sturm count.
int sturm_count(const std::vector<double>& d, const std::vector<double>& e2, double x) {
  int c = 0;
  double q = d[0] - x;
  if (q < 0) ++c;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e2[i - 1] / q;
    if (q < 0) ++c;
  }
  return c;
}

// Lowest two eigenvalues of the interval problem by second-order finite differences
// with ghost-point Robin conditions on N + 1 nodes.
std::pair<double, double> interval_fd(double L, double alpha, int N) {
  const double h = L / N;
  const double h2 = h * h;
  // Rows 0 and N: (2 + 2 h alpha) u_0 - 2 u_1, scaled by 1/h^2. The product of off-diagonal
  // pairs gives the symmetric similar matrix.
  std::vector<double> d(N + 1, 2.0 / h2), e2(N, 1.0 / (h2 * h2));
  d[0] = d[N] = (2.0 + 2.0 * h * alpha) / h2;
  e2[0] = e2[N - 1] = 2.0 / (h2 * h2);
  auto kth = [&](int k) {
    double lo = -1e3, hi = 1e3;
    while (hi - lo > 1e-13 * std::max(1.0, std::fabs(lo)))
      (sturm_count(d, e2, 0.5 * (lo + hi)) >= k ? hi : lo) = 0.5 * (lo + hi);
    return 0.5 * (lo + hi);
  };
  return {kth(1), kth(2)};
}

}  // namespace

// ---------------------------------------------------------------- geometry

TEST(Geometry, DoubleConeVertices) {
  const PolygonDomain sq = build_double_cone(pi / 2);
  EXPECT_EQ(sq.size(), 4u);
  EXPECT_TRUE(has_vertex(sq, 1, 0) && has_vertex(sq, -1, 0));
  EXPECT_NEAR(sq.vertices[1].y, -1.0, 1e-15);
  EXPECT_NEAR(sq.vertices[3].y, 1.0, 1e-15);
  EXPECT_NEAR(sq.signed_area(), 2.0, 1e-14);
  EXPECT_NO_THROW(sq.validate());
  EXPECT_THROW(build_double_cone(0.0), DomainError);
  EXPECT_THROW(build_double_cone(pi), DomainError);
}

TEST(Geometry, Diameters) {
  for (double theta : {0.1, 0.5, 1.0, pi / 3, pi / 2}) EXPECT_NEAR(diameter(build_double_cone(theta)), 2.0, 1e-15);
  EXPECT_NEAR(diameter(build_double_cone(2 * pi / 3)), 2.0 * std::sqrt(3.0), 1e-12);

  PolygonDomain unit;
  unit.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  unit.edge_kinds.assign(4, EdgeKind::Robin);
  EXPECT_NEAR(diameter(unit), std::sqrt(2.0), 1e-15);

  // Unscaled truncation of D_0.4 at eps = 0.05: the long diagonal between opposite cut corners.
  const double xc = 0.95, yc = std::tan(0.2) * 0.05;
  EXPECT_NEAR(diameter(truncated_unscaled(0.4, 0.05)), std::hypot(2 * xc, 2 * yc), 1e-14);
}

TEST(Geometry, Truncated) {
  const PolygonDomain p = build_truncated(pi / 3, 0.1);
  EXPECT_NEAR(diameter(p), 2.0, 1e-12);
  EXPECT_EQ(p.size(), 6u);
  for (double theta : {0.3, pi / 3, pi / 2})
    for (double eps : {1e-6, 0.025, 0.1, 0.2, 0.5}) {
      const PolygonDomain q = build_truncated(theta, eps);
      EXPECT_EQ(q.size(), 6u);
      EXPECT_NO_THROW(q.validate());
      EXPECT_NEAR(diameter(q), 2.0, 1e-12);
      EXPECT_TRUE(q.symmetric_in_x());
    }
  const double t = truncation_scale(pi / 2, 1e-6);
  EXPECT_NEAR(t, 1.0, 1e-5);
  EXPECT_THROW(build_truncated(pi / 3, 0.0), DomainError);
  EXPECT_THROW(build_truncated(pi / 3, 1.0), DomainError);
}

TEST(Geometry, RightHalf) {
  const PolygonDomain d = build_double_cone(pi / 3);
  const PolygonDomain h = right_half(d);
  EXPECT_NO_THROW(h.validate());
  EXPECT_NEAR(h.signed_area(), 0.5 * d.signed_area(), 1e-14);
  EXPECT_NEAR(h.perimeter(true), 0.5 * d.perimeter(), 1e-14);
  EXPECT_EQ(std::count(h.edge_kinds.begin(), h.edge_kinds.end(), EdgeKind::Symmetry), 1);
  const PolygonDomain ht = right_half(build_truncated(pi / 3, 0.1));
  EXPECT_NO_THROW(ht.validate());
  EXPECT_EQ(ht.size(), 4u);
}

// ---------------------------------------------------------------- mesh

TEST(Mesh, SquareCoversBoundary) {
  const PolygonDomain sq = build_double_cone(pi / 2);
  const TriMesh m = triangulate(sq, 0.5, false);
  EXPECT_NO_THROW(validate(m, &sq));
  EXPECT_LE(m.h, 0.5 + 1e-12);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) EXPECT_GT(m.triangle_area(t), 0.0);
  EXPECT_NEAR(m.area(), 2.0, 1e-12);
  EXPECT_NEAR(m.boundary_length(), sq.perimeter(), 1e-12);
}

TEST(Mesh, GradedNearVertices) {
  const PolygonDomain d = build_double_cone(pi / 3);
  const double h = 0.05;
  const TriMesh m = triangulate(d, h, true);
  EXPECT_NO_THROW(validate(m, &d));
  EXPECT_LE(m.h, h + 1e-12);
  for (double x : {-1.0, 1.0}) EXPECT_LE(m.min_element_size_near({x, 0.0}, 1e-9), h / 8.0);
}

TEST(Mesh, HalvingTargetTriplesNodes) {
  for (double theta : {pi / 2, pi / 3, 2 * pi / 7}) {
    const PolygonDomain d = build_double_cone(theta);
    for (double h : {0.2, 0.1, 0.05}) {
      const std::size_t a = triangulate(d, h, false).nodes.size();
      const std::size_t b = triangulate(d, h / 2, false).nodes.size();
      EXPECT_GE(b, 3 * a) << theta << " " << h;
    }
  }
}

TEST(Mesh, RefineMirrorAndExport) {
  const PolygonDomain d = build_double_cone(pi / 3);
  const TriMesh half = triangulate(right_half(d), 0.1, true);
  const TriMesh fine = refine_uniform(half);
  EXPECT_NO_THROW(validate(fine));
  EXPECT_EQ(fine.triangles.size(), 4 * half.triangles.size());
  EXPECT_NEAR(fine.area(), half.area(), 1e-13);
  const MirroredMesh full = mirror_x(fine);
  EXPECT_NO_THROW(validate(full.mesh, &d));
  EXPECT_NEAR(full.mesh.area(), d.signed_area(), 1e-12);
  for (std::size_t i = 0; i < full.mesh.nodes.size(); ++i) {
    const Point p = full.mesh.nodes[i], q = full.mesh.nodes[full.mirror[i]];
    EXPECT_EQ(p.x, -q.x);
    EXPECT_EQ(p.y, q.y);
  }
  std::ostringstream os;
  write_mesh(full.mesh, os);
  std::istringstream is(os.str());
  std::string w1, w2, w3;
  std::size_t n = 0, t = 0, b = 0;
  is >> w1 >> n >> w2 >> t >> w3 >> b;
  EXPECT_EQ(w1, "nodes");
  EXPECT_EQ(n, full.mesh.nodes.size());
  EXPECT_EQ(t, full.mesh.triangles.size());
  EXPECT_EQ(b, full.mesh.boundary.size());
}

// ---------------------------------------------------------------- assembly

TEST(Assembly, ReferenceTriangle) {
  TriMesh m;
  m.nodes = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.boundary = {{0, 1, EdgeKind::Robin}, {1, 2, EdgeKind::Robin}, {2, 0, EdgeKind::Robin}};
  m.update_h();
  const FemMatrices fm = assemble(m);
  const Eigen::MatrixXd K(fm.stiffness);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(K.row(i).sum(), 0.0, 1e-15);
  EXPECT_NEAR(K(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(K(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(K(0, 1), -0.5, 1e-15);
  EXPECT_NEAR(K(1, 2), 0.0, 1e-15);
  EXPECT_NEAR(sum_all(fm.mass), 0.5, 1e-15);
  EXPECT_NEAR(sum_all(fm.boundary_mass), 2.0 + std::sqrt(2.0), 1e-14);
}

TEST(Assembly, PartitionOfUnity) {
  for (double theta : {pi / 2, pi / 3}) {
    const PolygonDomain d = build_double_cone(theta);
    const MirroredMesh full = mirror_x(triangulate(right_half(d), 0.07, true));
    const FemMatrices fm = assemble(full.mesh);
    EXPECT_NEAR(sum_all(fm.mass), d.signed_area(), 1e-12);
    EXPECT_NEAR(sum_all(fm.boundary_mass), d.perimeter(), 1e-12);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(fm.stiffness.rows());
    EXPECT_LT((fm.stiffness * ones).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((Eigen::MatrixXd(fm.stiffness) - Eigen::MatrixXd(fm.stiffness).transpose()).cwiseAbs().maxCoeff(),
              1e-13);
    // Symmetry edges on the half mesh carry no boundary term.
    const TriMesh half = triangulate(right_half(d), 0.07, false);
    EXPECT_NEAR(sum_all(assemble(half).boundary_mass), 0.5 * d.perimeter(), 1e-12);
  }
  TriMesh bad;
  bad.nodes = {{0, 0}, {1, 0}, {2, 0}};
  bad.triangles = {{0, 1, 2}};
  EXPECT_THROW(assemble(bad), MeshError);
}

// ---------------------------------------------------------------- eigensolver

TEST(Eigensolver, NeumannKernel) {
  for (double h : {0.1, 0.03}) {
    const TriMesh m = mirror_x(triangulate(right_half(build_double_cone(pi / 3)), h, false)).mesh;
    const FemMatrices fm = assemble(m);
    // dense on the coarse mesh, Lanczos on the fine one
    const Eigen::Index thr = h > 0.05 ? Eigen::Index{1} << 20 : Eigen::Index{0};
    EigenOptions o;
    o.k = 3;
    o.dense_threshold = thr;
    const EigenResult r = solve_pencil(fm.stiffness, fm.mass, o);
    EXPECT_NEAR(r.values[0], 0.0, 1e-9) << r.method;
    const Eigen::VectorXd u = r.vectors.col(0) / r.vectors.col(0).mean();
    EXPECT_LT((u.array() - 1.0).abs().maxCoeff(), 1e-6) << r.method;
    EXPECT_LT(r.max_residual, 1e-10) << r.method;
  }
}

TEST(Eigensolver, RotatedSquare) {
  const TriMesh m = mirror_x(triangulate(right_half(build_double_cone(pi / 2)), 0.02, false)).mesh;
  const FemMatrices fm = assemble(m);
  const Eigen::VectorXd v = solve_lowest(fm.stiffness, fm.mass, fm.boundary_mass, 0.0, 4);
  EXPECT_NEAR(v[1], pi * pi / 2, 0.01 * pi * pi / 2);
  EXPECT_NEAR(v[2], pi * pi / 2, 0.01 * pi * pi / 2);
  EXPECT_NEAR(v[3], pi * pi, 0.01 * pi * pi);
  EXPECT_THROW(solve_lowest(fm.stiffness, fm.mass, fm.boundary_mass, 0.0, 0), DomainError);
}

TEST(Eigensolver, LanczosMatchesDense) {
  const TriMesh m = mirror_x(triangulate(right_half(build_double_cone(pi / 3)), 0.1, true)).mesh;
  const FemMatrices fm = assemble(m);
  for (double alpha : {-2.0, -0.5, 1.0}) {
    const SparseMatrix A = fm.robin_operator(alpha);
    EigenOptions o;
    o.k = 5;
    o.dense_threshold = 1 << 20;
    const EigenResult dense = solve_pencil(A, fm.mass, o);
    o.dense_threshold = 0;
    const EigenResult lan = solve_pencil(A, fm.mass, o);
    EXPECT_EQ(lan.method, "shift-invert-lanczos");
    for (int i = 0; i < 5; ++i)
      EXPECT_NEAR(lan.values[i], dense.values[i], 1e-9 * std::max(1.0, std::fabs(dense.values[i]))) << alpha << " " << i;
  }
}

// Ritz values from the Lanczos path must be eigenvalues of the pencil in order, including a multiplicity-two pair.
TEST(Eigensolver, DegeneratePair) {
  const TriMesh m = mirror_x(triangulate(right_half(build_double_cone(pi / 2)), 0.08, false)).mesh;
  const FemMatrices fm = assemble(m);
  EigenOptions o;
  o.k = 4;
  o.dense_threshold = 0;
  const EigenResult lan = solve_pencil(fm.stiffness, fm.mass, o);
  o.dense_threshold = 1 << 20;
  const EigenResult dense = solve_pencil(fm.stiffness, fm.mass, o);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(lan.values[i], dense.values[i], 1e-8 * std::max(1.0, dense.values[i]));
}

// ---------------------------------------------------------------- spectra

TEST(Spectrum, RotatedSquareNeumann) {
  const SpectrumResult r = robin_spectrum(pi / 2, 0.0, 0.02, 3, true);
  EXPECT_NEAR(r.eigenvalues[0], 0.0, 1e-9);
  EXPECT_NEAR(r.gap, pi * pi / 2, 0.01 * pi * pi / 2);
  EXPECT_EQ(r.parity_of_second, Parity::Odd);
  const SpectrumResult f = robin_spectrum(pi / 2, 0.0, 0.04, 3, false);
  EXPECT_NEAR(f.gap, pi * pi / 2, 0.01 * pi * pi / 2);
  EXPECT_EQ(f.parity_of_second, Parity::Odd);
}

TEST(Spectrum, HalfMatchesFull) {
  const SpectrumResult half = robin_spectrum(pi / 3, -2.0, 0.01, 2, true);
  const SpectrumResult full = robin_spectrum(pi / 3, -2.0, 0.01, 2, false);
  // Two significant figures of the gap.
  EXPECT_NEAR(half.gap, full.gap, 0.005 * full.gap);
  EXPECT_NEAR(half.eigenvalues[0], full.eigenvalues[0], 1e-8 * std::fabs(full.eigenvalues[0]));
  EXPECT_NEAR(half.eigenvalues[1], full.eigenvalues[1], 1e-8 * std::fabs(full.eigenvalues[1]));
  EXPECT_EQ(full.parities[0], Parity::Even);
  EXPECT_EQ(full.parity_of_second, Parity::Odd);
  EXPECT_EQ(half.parity_of_second, Parity::Odd);
}

TEST(Spectrum, PayneWeinberger) {
  for (double theta : {pi / 2, pi / 3, pi / 4, 2 * pi / 7, 0.5}) {
    const SpectrumResult r = robin_spectrum(theta, 0.0, 0.04, 2, true);
    EXPECT_GE(r.gap, pi * pi / 4 * 0.98) << theta;
  }
}

TEST(Spectrum, GalerkinMonotoneUnderRefinement) {
  SpectrumOptions o;
  o.graded = true;
  for (double alpha : {-2.0, 0.0, 1.5}) {
    const ExtrapolatedSpectrum e = robin_spectrum_extrapolated(pi / 3, alpha, 0.1, 3, true, 4, o);
    for (std::size_t l = 1; l < e.levels.size(); ++l)
      for (std::size_t j = 0; j < 3; ++j)
        EXPECT_LE(e.levels[l].eigenvalues[j], e.levels[l - 1].eigenvalues[j] + 1e-10) << alpha << " " << l << " " << j;
  }
}

// Richardson extrapolation is its own oracle: runs from two base meshes agree within the stated errors.
TEST(Spectrum, SelfConvergence) {
  SpectrumOptions o;
  o.graded = true;
  const ExtrapolatedSpectrum a = robin_spectrum_extrapolated(pi / 3, -2.0, 0.08, 2, true, 3, o);
  const ExtrapolatedSpectrum b = robin_spectrum_extrapolated(pi / 3, -2.0, 0.04, 2, true, 3, o);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(a.eigenvalues[j], b.eigenvalues[j], a.errors[j] + b.errors[j]) << j;
    EXPECT_LT(b.errors[j], a.errors[j]) << j;
    EXPECT_LT(b.eigenvalues[j], b.levels.back().eigenvalues[j]) << j;
  }
  EXPECT_LT(b.eigenvalues[0], -16.0);
  EXPECT_GT(b.gap, 0.3);
  EXPECT_LT(b.gap, 0.45);
}

TEST(Spectrum, ScalingOnMatchedMeshes) {
  const PolygonDomain d = build_double_cone(pi / 3);
  const TriMesh base = mirror_x(triangulate(right_half(d), 0.05, true)).mesh;
  const double alpha = -2.0;
  for (double t : {0.5, 2.0}) {
    const FemMatrices big = assemble(scale_mesh(base, t));
    const FemMatrices ref = assemble(base);
    const Eigen::VectorXd a = solve_lowest(big.stiffness, big.mass, big.boundary_mass, alpha, 2);
    const Eigen::VectorXd b = solve_lowest(ref.stiffness, ref.mass, ref.boundary_mass, t * alpha, 2);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(a[j], b[j] / (t * t), 0.005 * std::fabs(a[j])) << t << " " << j;
  }
}

// Galerkin values are upper bounds, so a discrete value below the cone energy proves the strict inequality.
// The margin shrinks exponentially with |alpha| / theta; alpha = -3 at theta = pi/4 is out of reach at this mesh size.
TEST(Spectrum, BelowConeGroundEnergy) {
  SpectrumOptions o;
  o.graded = true;
  for (double alpha : {-1.0, -2.0, -3.0})
    for (double theta : {pi / 2, 2 * pi / 5, pi / 3, pi / 4}) {
      if (alpha == -3.0 && theta < 1.0) continue;
      const ExtrapolatedSpectrum e = robin_spectrum_extrapolated(theta, alpha, 0.04, 2, true, 3, o);
      const double cone = cone_ground_energy({theta, alpha, 2});
      EXPECT_LT(e.levels.back().eigenvalues[0], cone) << alpha << " " << theta;
      EXPECT_LT(e.eigenvalues[0] + e.errors[0], cone) << alpha << " " << theta;
    }
}

TEST(Spectrum, TrialBoundSandwich) {
  SpectrumOptions o;
  o.graded = true;
  for (double theta : {pi / 2, pi / 3, pi / 4}) {
    const ExtrapolatedSpectrum e = robin_spectrum_extrapolated(theta, -2.0, 0.08, 2, true, 3, o);
    for (double eps : {0.1, 0.3, 0.5}) {
      const TrialBoundReport tb = trial_upper_bound({theta, -2.0, 2}, eps);
      EXPECT_LE(e.eigenvalues[1], tb.quotient + e.errors[1] + 1e-9) << theta << " " << eps;
    }
  }
}

TEST(Spectrum, Inputs) {
  EXPECT_THROW(robin_spectrum(pi / 3, -2.0, 0.1, 1, true), DomainError);
  EXPECT_THROW(robin_spectrum_extrapolated(pi / 3, -2.0, 0.1, 2, true, 1), DomainError);
  PolygonDomain skew;
  skew.vertices = {{-1, 0}, {0.5, -0.5}, {1, 0}, {0, 1}};
  skew.edge_kinds.assign(4, EdgeKind::Robin);
  EXPECT_THROW(robin_spectrum_on(skew, -1.0, 0.1), DomainError);
}

// ---------------------------------------------------------------- interval

TEST(Interval, Neumann) {
  const auto [l1, l2] = interval_spectrum(2.0, 0.0);
  EXPECT_NEAR(l1, 0.0, 1e-12);
  EXPECT_NEAR(l2, pi * pi / 4, 1e-12);
}

TEST(Interval, FiniteDifferenceOracle) {
  for (double alpha : {-2.0, -0.7, 0.5, 3.0}) {
    const auto [l1, l2] = interval_spectrum(2.0, alpha);
    const auto [f1, f2] = interval_fd(2.0, alpha, 10000);
    EXPECT_NEAR(l1, f1, 1e-6 * std::fabs(f1)) << alpha;
    EXPECT_NEAR(l2, f2, 1e-6 * std::fabs(f2)) << alpha;
  }
  const auto [l1, l2] = interval_spectrum(2.0, -2.0);
  EXPECT_LT(l1, 0.0);
  EXPECT_LT(l2, 0.0);
}

TEST(Interval, Scaling) {
  const double t = 2.0;
  const auto [a1, a2] = interval_spectrum(t * 1.0, -2.0 / t);
  const auto [b1, b2] = interval_spectrum(1.0, -2.0);
  EXPECT_NEAR(a1, b1 / (t * t), 1e-9 * std::max(1.0, std::fabs(a1)));
  EXPECT_NEAR(a2, b2 / (t * t), 1e-9 * std::max(1.0, std::fabs(a2)));
  EXPECT_NEAR(b2, 0.0, 1e-12);  // u = x solves the odd problem when alpha L = -2
  for (double L : {0.5, 1.0, 4.0})
    for (double alpha : {-5.0, -1.0, 2.0}) {
      const auto [c1, c2] = interval_spectrum(L, alpha);
      const auto [d1, d2] = interval_spectrum(L * t, alpha / t);
      EXPECT_NEAR(d1, c1 / (t * t), 1e-9 * std::max(1.0, std::fabs(d1)));
      EXPECT_NEAR(d2, c2 / (t * t), 1e-9 * std::max(1.0, std::fabs(d2)));
    }
  EXPECT_THROW(interval_spectrum(0.0, 1.0), DomainError);
}
