#pragma once

// Conforming triangulations of convex polygons by longest-edge (Rivara)
// bisection of a centroid fan, uniform red refinement, reflection in x = 0,
// and a plain-text export.
//
// Export format:
//   nodes <N> triangles <T> boundary <B>
//   N lines "x y"
//   T lines "i j k"        (0-based, counterclockwise)
//   B lines "a b kind"     (a -> b counterclockwise along the boundary; kind is robin or symmetry)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "robin_gap/error.hpp"
#include "robin_gap/geometry.hpp"

namespace robin_gap {

struct BoundaryEdge {
  int a = 0;
  int b = 0;  // the domain lies to the left of a -> b
  EdgeKind kind = EdgeKind::Robin;
};

struct TriMesh {
  std::vector<Point> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  double h = 0.0;  // longest edge

  std::size_t node_count() const { return nodes.size(); }

  double triangle_area(std::size_t t) const {
    const auto& T = triangles[t];
    return 0.5 * cross(nodes[T[1]] - nodes[T[0]], nodes[T[2]] - nodes[T[0]]);
  }

  double longest_edge(std::size_t t) const {
    const auto& T = triangles[t];
    return std::max({distance(nodes[T[0]], nodes[T[1]]), distance(nodes[T[1]], nodes[T[2]]),
                     distance(nodes[T[2]], nodes[T[0]])});
  }

  double area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
    return a;
  }

  double boundary_length(bool robin_only = false) const {
    double l = 0.0;
    for (const auto& e : boundary)
      if (!robin_only || e.kind == EdgeKind::Robin) l += distance(nodes[e.a], nodes[e.b]);
    return l;
  }

  void update_h() {
    h = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) h = std::max(h, longest_edge(t));
  }

  /// Smallest longest-edge among triangles with a vertex within `radius` of p.
  double min_element_size_near(Point p, double radius) const {
    double best = 1e300;
    for (std::size_t t = 0; t < triangles.size(); ++t)
      for (int v : triangles[t])
        if (distance(nodes[v], p) <= radius) {
          best = std::min(best, longest_edge(t));
          break;
        }
    return best;
  }
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

// Longest-edge bisection state. Triangle slots are reused by the first child.
class RivaraMesher {
 public:
  explicit RivaraMesher(const PolygonDomain& poly) {
    const int n = static_cast<int>(poly.size());
    Point c{0.0, 0.0};
    for (const Point& v : poly.vertices) c = c + v;
    c = (1.0 / n) * c;
    nodes_ = poly.vertices;
    nodes_.push_back(c);
    for (int i = 0; i < n; ++i) {
      const int j = (i + 1) % n;
      add_triangle({i, j, n});
      boundary_[edge_key(i, j)] = {i, j, poly.edge_kinds[i]};
    }
  }

  template <class SizeFn>
  void refine(SizeFn size) {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t t = 0; t < tris_.size(); ++t) {
        while (too_big(t, size)) {
          lepp_bisect(static_cast<int>(t));
          changed = true;
        }
      }
    }
  }

  TriMesh finish() const {
    TriMesh m;
    m.nodes = nodes_;
    m.triangles = tris_;
    for (const auto& [key, e] : boundary_) m.boundary.push_back(e);
    m.update_h();
    return m;
  }

 private:
  struct EdgeRef {
    int a, b;  // endpoints in some order
    double len2;
    std::uint64_t key;
  };

  template <class SizeFn>
  bool too_big(std::size_t t, SizeFn& size) const {
    const auto& T = tris_[t];
    const Point c = (1.0 / 3.0) * (nodes_[T[0]] + nodes_[T[1]] + nodes_[T[2]]);
    const double s = size(c);
    return longest(static_cast<int>(t)).len2 > s * s;
  }

  EdgeRef longest(int t) const {
    const auto& T = tris_[t];
    EdgeRef best{0, 0, -1.0, 0};
    for (int i = 0; i < 3; ++i) {
      const int a = T[i], b = T[(i + 1) % 3];
      const double dx = nodes_[a].x - nodes_[b].x, dy = nodes_[a].y - nodes_[b].y;
      const EdgeRef e{a, b, dx * dx + dy * dy, edge_key(a, b)};
      if (e.len2 > best.len2 || (e.len2 == best.len2 && e.key < best.key)) best = e;
    }
    return best;
  }

  int neighbor(int t, std::uint64_t key) const {
    const auto& owners = edges_.at(key);
    return owners[0] == t ? owners[1] : owners[0];
  }

  void lepp_bisect(int t) {
    int cur = t;
    for (int guard = 0; guard < 100000; ++guard) {
      const EdgeRef e = longest(cur);
      const int nb = neighbor(cur, e.key);
      if (nb < 0 || longest(nb).key == e.key) {
        bisect(e);
        return;
      }
      cur = nb;
    }
    throw MeshError("triangulate: longest-edge propagation path did not terminate");
  }

  void add_triangle(std::array<int, 3> T, int slot = -1) {
    if (slot < 0) {
      slot = static_cast<int>(tris_.size());
      tris_.push_back(T);
    } else {
      tris_[slot] = T;
    }
    for (int i = 0; i < 3; ++i) {
      auto [it, inserted] = edges_.try_emplace(edge_key(T[i], T[(i + 1) % 3]), std::array<int, 2>{-1, -1});
      auto& owners = it->second;
      if (owners[0] == slot || owners[1] == slot) continue;
      if (owners[0] < 0)
        owners[0] = slot;
      else if (owners[1] < 0)
        owners[1] = slot;
      else
        throw MeshError("triangulate: edge shared by more than two triangles");
    }
  }

  void detach(int t, std::uint64_t key) {
    auto& owners = edges_.at(key);
    if (owners[0] == t) owners[0] = -1;
    if (owners[1] == t) owners[1] = -1;
    if (owners[0] < 0 && owners[1] >= 0) std::swap(owners[0], owners[1]);
    if (owners[0] < 0) edges_.erase(key);
  }

  void bisect(const EdgeRef& e) {
    const int m = static_cast<int>(nodes_.size());
    nodes_.push_back(0.5 * (nodes_[e.a] + nodes_[e.b]));
    const auto owners = edges_.at(e.key);
    for (int t : owners) {
      if (t < 0) continue;
      const auto T = tris_[t];
      int i = 0;
      while (edge_key(T[i], T[(i + 1) % 3]) != e.key) ++i;
      const int p = T[i], q = T[(i + 1) % 3], r = T[(i + 2) % 3];
      for (int k = 0; k < 3; ++k) detach(t, edge_key(T[k], T[(k + 1) % 3]));
      add_triangle({p, m, r}, t);
      add_triangle({m, q, r});
    }
    auto bit = boundary_.find(e.key);
    if (bit != boundary_.end()) {
      const BoundaryEdge be = bit->second;
      boundary_.erase(bit);
      boundary_[edge_key(be.a, m)] = {be.a, m, be.kind};
      boundary_[edge_key(m, be.b)] = {m, be.b, be.kind};
    }
  }

  std::vector<Point> nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edges_;
  std::map<std::uint64_t, BoundaryEdge> boundary_;
};

}  // namespace detail

/// Geometric grading toward the polygon's grade points.
struct GradingOptions {
  double ratio = 0.7;   // element size factor per layer
  int layers = 12;
  double radius = 0.5;  // distance at which grading begins
};

/// Local target size: target_h ratio^L with L = clamp(floor(log(d/radius)/log(ratio)), 0, layers),
/// d the distance to the nearest grade point.
inline double graded_size(Point p, const PolygonDomain& poly, double target_h, const GradingOptions& g) {
  double d = 1e300;
  for (const Point& q : poly.grade_points) d = std::min(d, distance(p, q));
  if (!(d < g.radius)) return target_h;
  int L = g.layers;
  if (d > 0.0) L = std::clamp(static_cast<int>(std::floor(std::log(d / g.radius) / std::log(g.ratio))), 0, g.layers);
  return target_h * std::pow(g.ratio, L);
}

inline TriMesh triangulate(const PolygonDomain& poly, double target_h, bool grade_to_vertices,
                           const GradingOptions& grading = {}) {
  poly.validate();
  if (!(target_h > 0.0)) throw DomainError("triangulate: target_h must be positive");
  const double min_size = target_h * (grade_to_vertices ? std::pow(grading.ratio, grading.layers) : 1.0);
  const double est = poly.signed_area() / (0.25 * min_size * min_size);
  if (!grade_to_vertices && est > 5e7) throw MeshError("triangulate: target_h too small for this domain");
  detail::RivaraMesher mesher(poly);
  if (grade_to_vertices && !poly.grade_points.empty())
    mesher.refine([&](Point p) { return graded_size(p, poly, target_h, grading); });
  else
    mesher.refine([&](Point) { return target_h; });
  return mesher.finish();
}

/// Splits every triangle into four through its edge midpoints.
inline TriMesh refine_uniform(const TriMesh& mesh) {
  TriMesh out;
  out.nodes = mesh.nodes;
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto key = detail::edge_key(a, b);
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int m = static_cast<int>(out.nodes.size());
    out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    mid.emplace(key, m);
    return m;
  };
  out.triangles.reserve(4 * mesh.triangles.size());
  for (const auto& T : mesh.triangles) {
    const int a = midpoint(T[0], T[1]), b = midpoint(T[1], T[2]), c = midpoint(T[2], T[0]);
    out.triangles.push_back({T[0], a, c});
    out.triangles.push_back({a, T[1], b});
    out.triangles.push_back({c, b, T[2]});
    out.triangles.push_back({a, b, c});
  }
  for (const auto& e : mesh.boundary) {
    const int m = midpoint(e.a, e.b);
    out.boundary.push_back({e.a, m, e.kind});
    out.boundary.push_back({m, e.b, e.kind});
  }
  out.update_h();
  return out;
}

/// Node-wise reflection map of a mesh symmetric in x: mirror[i] is the node at (-x_i, y_i).
struct MirroredMesh {
  TriMesh mesh;
  std::vector<int> mirror;
};

/// Joins a mesh of the right half {x >= 0} with its reflection. Nodes on x = 0
/// are shared and Symmetry edges become interior.
inline MirroredMesh mirror_x(const TriMesh& half) {
  const int n = static_cast<int>(half.nodes.size());
  for (const Point& p : half.nodes)
    if (p.x < 0.0) throw MeshError("mirror_x: mesh has nodes with x < 0");
  MirroredMesh out;
  out.mesh.nodes = half.nodes;
  std::vector<int> image(n);
  for (int i = 0; i < n; ++i) {
    if (half.nodes[i].x == 0.0) {
      image[i] = i;
    } else {
      image[i] = static_cast<int>(out.mesh.nodes.size());
      out.mesh.nodes.push_back({-half.nodes[i].x, half.nodes[i].y});
    }
  }
  out.mesh.triangles = half.triangles;
  for (const auto& T : half.triangles) out.mesh.triangles.push_back({image[T[0]], image[T[2]], image[T[1]]});
  for (const auto& e : half.boundary) {
    if (e.kind == EdgeKind::Symmetry) continue;
    out.mesh.boundary.push_back(e);
    out.mesh.boundary.push_back({image[e.b], image[e.a], e.kind});
  }
  out.mirror.assign(out.mesh.nodes.size(), -1);
  for (int i = 0; i < n; ++i) {
    out.mirror[i] = image[i];
    out.mirror[image[i]] = i;
  }
  out.mesh.update_h();
  return out;
}

inline TriMesh scale_mesh(const TriMesh& mesh, double t) {
  if (!(t > 0.0)) throw DomainError("scale_mesh: factor must be positive");
  TriMesh out = mesh;
  for (Point& p : out.nodes) p = t * p;
  out.h = t * mesh.h;
  return out;
}

/// Throws MeshError unless every triangle is positively oriented, every edge
/// has one or two triangles, and the single-triangle edges are exactly the
/// boundary list with matching orientation. If a polygon is given, boundary
/// edges must lie on its edges and cover its perimeter.
inline void validate(const TriMesh& mesh, const PolygonDomain* poly = nullptr) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::unordered_map<std::uint64_t, std::array<int, 3>> edges;  // count, a, b of the first owner
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& T = mesh.triangles[t];
    for (int v : T)
      if (v < 0 || v >= n) throw MeshError("validate: triangle " + std::to_string(t) + " has a bad node index");
    if (!(mesh.triangle_area(t) > 0.0)) throw MeshError("validate: triangle " + std::to_string(t) + " is not positively oriented");
    for (int i = 0; i < 3; ++i) {
      auto& rec = edges[detail::edge_key(T[i], T[(i + 1) % 3])];
      if (rec[0] == 0) rec = {0, T[i], T[(i + 1) % 3]};
      ++rec[0];
    }
  }
  std::size_t single = 0;
  for (const auto& [key, rec] : edges) {
    if (rec[0] > 2) throw MeshError("validate: edge shared by more than two triangles");
    if (rec[0] == 1) ++single;
  }
  if (single != mesh.boundary.size())
    throw MeshError("validate: " + std::to_string(single) + " unshared edges but " +
                    std::to_string(mesh.boundary.size()) + " boundary edges (hanging node or gap)");
  for (const auto& e : mesh.boundary) {
    auto it = edges.find(detail::edge_key(e.a, e.b));
    if (it == edges.end() || it->second[0] != 1) throw MeshError("validate: boundary edge is not an unshared mesh edge");
    if (it->second[1] != e.a || it->second[2] != e.b) throw MeshError("validate: boundary edge orientation is not counterclockwise");
  }
  if (poly) {
    for (const auto& e : mesh.boundary) {
      const Point m = 0.5 * (mesh.nodes[e.a] + mesh.nodes[e.b]);
      double best = 1e300;
      for (std::size_t j = 0; j < poly->size(); ++j) {
        const Point p = poly->vertices[j], q = poly->vertices[(j + 1) % poly->size()];
        best = std::min(best, std::fabs(cross(q - p, m - p)) / distance(p, q));
      }
      if (best > 1e-10) throw MeshError("validate: boundary edge off the polygon boundary");
    }
    if (std::fabs(mesh.boundary_length() - poly->perimeter()) > 1e-10 * poly->perimeter())
      throw MeshError("validate: boundary edges do not cover the perimeter");
  }
}

inline void write_mesh(const TriMesh& mesh, std::ostream& os) {
  char buf[96];
  os << "nodes " << mesh.nodes.size() << " triangles " << mesh.triangles.size() << " boundary "
     << mesh.boundary.size() << '\n';
  for (const Point& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  for (const auto& T : mesh.triangles) os << T[0] << ' ' << T[1] << ' ' << T[2] << '\n';
  for (const auto& e : mesh.boundary)
    os << e.a << ' ' << e.b << ' ' << (e.kind == EdgeKind::Robin ? "robin" : "symmetry") << '\n';
}

inline void write_mesh(const TriMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("write_mesh: cannot open " + path);
  write_mesh(mesh, os);
}

}  // namespace robin_gap
