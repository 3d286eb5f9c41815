#pragma once

// P1 Galerkin matrices for the Robin form  int grad u . grad v + alpha int_{Robin edges} u v.

#include <array>
#include <vector>

#include <Eigen/Sparse>

#include "robin_gap/error.hpp"
#include "robin_gap/mesh.hpp"

namespace robin_gap {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct FemMatrices {
  SparseMatrix stiffness;
  SparseMatrix mass;           // consistent
  SparseMatrix boundary_mass;  // Robin edges only; Symmetry edges carry no term

  /// stiffness + alpha * boundary_mass
  SparseMatrix robin_operator(double alpha) const { return stiffness + alpha * boundary_mass; }
};

inline FemMatrices assemble(const TriMesh& mesh) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<Eigen::Triplet<double>> kt, mt, bt;
  kt.reserve(9 * mesh.triangles.size());
  mt.reserve(9 * mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    if (!(area > 0.0)) throw MeshError("assemble: degenerate triangle " + std::to_string(t));
    std::array<double, 3> b{}, c{};
    for (int i = 0; i < 3; ++i) {
      const Point pj = mesh.nodes[T[(i + 1) % 3]], pk = mesh.nodes[T[(i + 2) % 3]];
      b[i] = pj.y - pk.y;
      c[i] = pk.x - pj.x;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(T[i], T[j], (b[i] * b[j] + c[i] * c[j]) / (4.0 * area));
        mt.emplace_back(T[i], T[j], area / 12.0 * (i == j ? 2.0 : 1.0));
      }
  }
  for (const auto& e : mesh.boundary) {
    if (e.kind != EdgeKind::Robin) continue;
    const double L = distance(mesh.nodes[e.a], mesh.nodes[e.b]);
    bt.emplace_back(e.a, e.a, L / 3.0);
    bt.emplace_back(e.b, e.b, L / 3.0);
    bt.emplace_back(e.a, e.b, L / 6.0);
    bt.emplace_back(e.b, e.a, L / 6.0);
  }
  FemMatrices out;
  out.stiffness.resize(n, n);
  out.mass.resize(n, n);
  out.boundary_mass.resize(n, n);
  out.stiffness.setFromTriplets(kt.begin(), kt.end());
  out.mass.setFromTriplets(mt.begin(), mt.end());
  out.boundary_mass.setFromTriplets(bt.begin(), bt.end());
  return out;
}

/// Rows and columns `keep` of a square sparse matrix.
inline SparseMatrix restrict_dofs(const SparseMatrix& A, const std::vector<int>& keep) {
  std::vector<int> pos(A.rows(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.nonZeros());
  for (int col = 0; col < A.outerSize(); ++col) {
    if (pos[col] < 0) continue;
    for (SparseMatrix::InnerIterator it(A, col); it; ++it)
      if (pos[it.row()] >= 0) trip.emplace_back(pos[it.row()], pos[col], it.value());
  }
  SparseMatrix R(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(keep.size()));
  R.setFromTriplets(trip.begin(), trip.end());
  return R;
}

}  // namespace robin_gap
