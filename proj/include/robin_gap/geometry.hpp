#pragma once

// Convex polygons: the double cone (a rhombus in the plane), its truncations,
// and the right half used by the even/odd decomposition.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "robin_gap/error.hpp"

namespace robin_gap {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Boundary condition carried by a polygon edge. Symmetry edges lie on x = 0
/// and receive Neumann or Dirichlet data depending on the parity class solved.
enum class EdgeKind { Robin, Symmetry };

struct PolygonDomain {
  std::vector<Point> vertices;        // counterclockwise
  std::vector<EdgeKind> edge_kinds;   // edge i joins vertex i and i+1
  std::vector<Point> grade_points;    // where graded meshes concentrate
  std::string label;

  std::size_t size() const { return vertices.size(); }

  double signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < size(); ++i) a += cross(vertices[i], vertices[(i + 1) % size()]);
    return 0.5 * a;
  }

  double perimeter(bool robin_only = false) const {
    double p = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      if (!robin_only || edge_kinds[i] == EdgeKind::Robin) p += distance(vertices[i], vertices[(i + 1) % size()]);
    return p;
  }

  /// Throws MeshError unless the polygon is closed, counterclockwise, strictly convex and of positive area.
  void validate() const {
    if (size() < 3) throw MeshError("PolygonDomain '" + label + "': needs at least 3 vertices");
    if (edge_kinds.size() != size()) throw MeshError("PolygonDomain '" + label + "': one edge kind per edge");
    if (!(signed_area() > 0.0)) throw MeshError("PolygonDomain '" + label + "': area must be positive (ccw)");
    for (std::size_t i = 0; i < size(); ++i) {
      const Point a = vertices[i], b = vertices[(i + 1) % size()], c = vertices[(i + 2) % size()];
      if (!(cross(b - a, c - b) > 0.0))
        throw MeshError("PolygonDomain '" + label + "': not strictly convex at vertex " + std::to_string((i + 1) % size()));
    }
  }

  bool symmetric_in_x(double tol = 1e-12) const {
    for (const Point& p : vertices) {
      const bool found = std::any_of(vertices.begin(), vertices.end(), [&](const Point& q) {
        return std::fabs(q.x + p.x) <= tol && std::fabs(q.y - p.y) <= tol;
      });
      if (!found) return false;
    }
    return true;
  }
};

/// {|y| < tan(theta/2) (1 - |x|)}, with vertices (-1,0), (0,-t), (1,0), (0,t).
inline PolygonDomain build_double_cone(double theta) {
  if (!(theta > 0.0 && theta < std::numbers::pi))
    throw DomainError("build_double_cone: theta must lie in (0, pi)");
  const double t = std::tan(0.5 * theta);
  PolygonDomain p;
  p.vertices = {{-1.0, 0.0}, {0.0, -t}, {1.0, 0.0}, {0.0, t}};
  p.edge_kinds.assign(4, EdgeKind::Robin);
  p.grade_points = {{-1.0, 0.0}, {1.0, 0.0}};
  p.label = "double_cone";
  return p;
}

/// Maximum distance between two vertices.
inline double diameter(const PolygonDomain& poly) {
  double d = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    for (std::size_t j = i + 1; j < poly.size(); ++j) d = std::max(d, distance(poly.vertices[i], poly.vertices[j]));
  return d;
}

inline PolygonDomain scale_polygon(const PolygonDomain& poly, double t) {
  if (!(t > 0.0)) throw DomainError("scale_polygon: factor must be positive");
  PolygonDomain out = poly;
  for (Point& p : out.vertices) p = t * p;
  for (Point& p : out.grade_points) p = t * p;
  return out;
}

/// The double cone cut at |x| = 1 - eps before rescaling.
inline PolygonDomain truncated_unscaled(double theta, double eps) {
  (void)build_double_cone(theta);  // validates theta
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("build_truncated: eps must lie in (0, 1)");
  const double t = std::tan(0.5 * theta);
  const double xc = 1.0 - eps;
  const double yc = t * eps;
  if (!(yc > 0.0) || !(xc > 0.0)) throw DomainError("build_truncated: degenerate truncation");
  PolygonDomain p;
  p.vertices = {{-xc, -yc}, {0.0, -t}, {xc, -yc}, {xc, yc}, {0.0, t}, {-xc, yc}};
  p.edge_kinds.assign(6, EdgeKind::Robin);
  p.grade_points = {{-xc, -yc}, {-xc, yc}, {xc, -yc}, {xc, yc}};
  p.label = "truncated_double_cone";
  return p;
}

/// Scale factor t(eps) that brings the truncated cone back to diameter 2.
inline double truncation_scale(double theta, double eps) { return 2.0 / diameter(truncated_unscaled(theta, eps)); }

/// t(eps) {(x,y) in the double cone : |x| < 1 - eps}, a hexagon of diameter 2.
inline PolygonDomain build_truncated(double theta, double eps) {
  PolygonDomain p = truncated_unscaled(theta, eps);
  p.validate();
  return scale_polygon(p, 2.0 / diameter(p));
}

/// Intersection with {x >= 0}; the cut edge on x = 0 becomes a Symmetry edge.
inline PolygonDomain right_half(const PolygonDomain& poly) {
  poly.validate();
  const std::size_t n = poly.size();
  std::vector<Point> pts;
  auto push = [&](Point p) {
    if (pts.empty() || distance(pts.back(), p) > 0.0) pts.push_back(p);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly.vertices[i], b = poly.vertices[(i + 1) % n];
    const bool ain = a.x >= 0.0, bin = b.x >= 0.0;
    if (ain) push(a);
    if (ain != bin) {
      Point c = a + (a.x / (a.x - b.x)) * (b - a);
      c.x = 0.0;
      push(c);
    }
  }
  while (pts.size() > 1 && distance(pts.front(), pts.back()) == 0.0) pts.pop_back();

  PolygonDomain out;
  out.label = poly.label + "_right_half";
  out.vertices = pts;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point a = pts[i], b = pts[(i + 1) % pts.size()];
    EdgeKind kind = EdgeKind::Symmetry;
    if (!(a.x == 0.0 && b.x == 0.0)) {
      // Inherit from the original edge that contains the segment midpoint.
      const Point m = 0.5 * (a + b);
      double best = 1e300;
      for (std::size_t j = 0; j < n; ++j) {
        const Point p = poly.vertices[j], q = poly.vertices[(j + 1) % n];
        const double d = std::fabs(cross(q - p, m - p)) / distance(p, q);
        if (d < best) {
          best = d;
          kind = poly.edge_kinds[j];
        }
      }
    }
    out.edge_kinds.push_back(kind);
  }
  for (const Point& g : poly.grade_points)
    if (g.x >= 0.0) out.grade_points.push_back(g);
  out.validate();
  return out;
}

}  // namespace robin_gap
