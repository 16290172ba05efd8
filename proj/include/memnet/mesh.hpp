#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "memnet/geometry.hpp"

namespace memnet {

using Triangle = std::array<std::int32_t, 3>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshParseError : public MeshError {
 public:
  MeshParseError(std::size_t line, const std::string& what)
      : MeshError("mesh parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Undirected edge key with the smaller vertex first.
inline std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

struct TriangleMesh {
  std::vector<Point2> vertices;
  std::vector<Triangle> triangles;
  std::vector<bool> boundary_vertex;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  std::array<Point2, 3> corners(std::size_t t) const {
    const Triangle& tri = triangles[t];
    return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
  }

  double triangle_area(std::size_t t) const {
    const auto c = corners(t);
    return 0.5 * orient2d(c[0], c[1], c[2]);
  }

  double total_area() const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
    return a;
  }

  /// Longest edge over all triangles.
  double max_edge_length() const {
    double h = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      const auto c = corners(t);
      for (int i = 0; i < 3; ++i) h = std::max(h, distance(c[i], c[(i + 1) % 3]));
    }
    return h;
  }

  BoundingBox bounding_box() const {
    BoundingBox box;
    for (Point2 p : vertices) box.expand(p);
    return box;
  }
};

/// Map from each undirected edge to the (one or two) triangles using it.
inline std::unordered_map<std::uint64_t, std::vector<std::int32_t>> edge_triangles(
    const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>> edges;
  edges.reserve(mesh.triangles.size() * 2);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      edges[edge_key(tri[i], tri[(i + 1) % 3])].push_back(static_cast<std::int32_t>(t));
  }
  return edges;
}

inline std::vector<bool> compute_boundary_flags(const TriangleMesh& mesh) {
  std::vector<bool> flags(mesh.vertices.size(), false);
  for (const auto& [key, tris] : edge_triangles(mesh)) {
    if (tris.size() == 1) {
      flags[key >> 32] = true;
      flags[key & 0xffffffffu] = true;
    }
  }
  return flags;
}

/// Reorients triangles counter-clockwise and checks every mesh invariant.
/// Throws MeshError naming the offending item.
inline void validate_mesh(TriangleMesh& mesh) {
  const auto np = static_cast<std::int64_t>(mesh.vertices.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (!is_finite(mesh.vertices[v]))
      throw MeshError("vertex " + std::to_string(v) + " has non-finite coordinates");
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    Triangle& tri = mesh.triangles[t];
    for (auto idx : tri)
      if (idx < 0 || idx >= np)
        throw MeshError("triangle " + std::to_string(t) + " has vertex index " +
                        std::to_string(idx) + " out of range");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw MeshError("triangle " + std::to_string(t) + " repeats a vertex");
    const double a = mesh.triangle_area(t);
    if (a == 0.0) throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    if (a < 0.0) std::swap(tri[1], tri[2]);
  }
  // Conformity: every edge is shared by at most two triangles which traverse
  // it in opposite directions (no overlaps, no duplicates).
  std::unordered_map<std::uint64_t, std::pair<int, int>> uses;  // count, net direction
  uses.reserve(mesh.triangles.size() * 2);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const auto a = tri[i], b = tri[(i + 1) % 3];
      auto& u = uses[edge_key(a, b)];
      u.first += 1;
      u.second += (a < b) ? 1 : -1;
      if (u.first > 2 || (u.first == 2 && u.second != 0))
        throw MeshError("nonconforming mesh: edge (" + std::to_string(std::min(a, b)) + "," +
                        std::to_string(std::max(a, b)) + ") overlaps at triangle " +
                        std::to_string(t));
    }
  }
  const auto flags = compute_boundary_flags(mesh);
  if (mesh.boundary_vertex.empty()) {
    mesh.boundary_vertex = flags;
  } else {
    if (mesh.boundary_vertex.size() != flags.size())
      throw MeshError("boundary flag count does not match vertex count");
    for (std::size_t v = 0; v < flags.size(); ++v)
      if (mesh.boundary_vertex[v] != flags[v])
        throw MeshError("boundary flag of vertex " + std::to_string(v) +
                        " disagrees with mesh topology");
  }
}

/// Splits every triangle into four through its edge midpoints. New midpoints
/// of boundary edges are passed through `snap_boundary`.
template <typename Snap>
TriangleMesh refine_uniform(const TriangleMesh& mesh, Snap&& snap_boundary) {
  TriangleMesh out;
  out.vertices = mesh.vertices;
  out.boundary_vertex = mesh.boundary_vertex;
  const auto edges = edge_triangles(mesh);
  std::unordered_map<std::uint64_t, std::int32_t> midpoint;
  midpoint.reserve(edges.size());
  auto mid = [&](std::int32_t a, std::int32_t b) {
    const auto key = edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    Point2 p = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
    const bool on_boundary = edges.at(key).size() == 1;
    if (on_boundary) p = snap_boundary(p);
    const auto id = static_cast<std::int32_t>(out.vertices.size());
    out.vertices.push_back(p);
    out.boundary_vertex.push_back(on_boundary);
    midpoint.emplace(key, id);
    return id;
  };
  out.triangles.reserve(4 * mesh.triangles.size());
  for (const Triangle& t : mesh.triangles) {
    const auto ab = mid(t[0], t[1]);
    const auto bc = mid(t[1], t[2]);
    const auto ca = mid(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({ab, t[1], bc});
    out.triangles.push_back({ca, bc, t[2]});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

inline TriangleMesh refine_uniform(const TriangleMesh& mesh) {
  return refine_uniform(mesh, [](Point2 p) { return p; });
}

/// Disk of the given radius centred at the origin: a hexagonal fan refined
/// `refinement` times, boundary midpoints snapped radially onto the circle.
inline TriangleMesh generate_disk_mesh(double radius, int refinement) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw std::invalid_argument("disk radius must be positive and finite");
  if (refinement < 0) throw std::invalid_argument("refinement level must be >= 0");
  TriangleMesh mesh;
  mesh.vertices.push_back({0.0, 0.0});
  mesh.boundary_vertex.push_back(false);
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    mesh.vertices.push_back({radius * std::cos(a), radius * std::sin(a)});
    mesh.boundary_vertex.push_back(true);
  }
  for (std::int32_t k = 0; k < 6; ++k) mesh.triangles.push_back({0, 1 + k, 1 + (k + 1) % 6});
  auto snap = [radius](Point2 p) { return (radius / norm(p)) * p; };
  for (int r = 0; r < refinement; ++r) mesh = refine_uniform(mesh, snap);
  return mesh;
}

/// Convex hull of the boundary vertices; the clamp region for network points.
inline ConvexDomain boundary_hull(const TriangleMesh& mesh) {
  std::vector<Point2> pts;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (mesh.boundary_vertex[v]) pts.push_back(mesh.vertices[v]);
  return ConvexDomain(ConvexPolygon{std::move(pts)});
}

inline void write_mesh(const TriangleMesh& mesh, std::ostream& os) {
  os << mesh.vertices.size() << ' ' << mesh.triangles.size() << '\n';
  os << std::setprecision(17);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    os << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << ' '
       << (mesh.boundary_vertex[v] ? 1 : 0) << '\n';
  for (const Triangle& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline TriangleMesh read_mesh(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() -> std::istringstream {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    throw MeshParseError(lineno + 1, "unexpected end of file");
  };
  auto expect_end = [&](std::istringstream& ss) {
    std::string rest;
    if (ss >> rest) throw MeshParseError(lineno, "trailing token '" + rest + "'");
  };
  TriangleMesh mesh;
  long long np = 0, nt = 0;
  {
    auto ss = next();
    if (!(ss >> np >> nt) || np < 0 || nt < 0)
      throw MeshParseError(lineno, "expected header 'n_p n_t'");
    expect_end(ss);
  }
  mesh.vertices.reserve(np);
  mesh.boundary_vertex.reserve(np);
  for (long long i = 0; i < np; ++i) {
    auto ss = next();
    double x, y;
    int b;
    if (!(ss >> x >> y >> b) || (b != 0 && b != 1))
      throw MeshParseError(lineno, "expected vertex 'x y b' with b in {0,1}");
    expect_end(ss);
    mesh.vertices.push_back({x, y});
    mesh.boundary_vertex.push_back(b == 1);
  }
  mesh.triangles.reserve(nt);
  for (long long i = 0; i < nt; ++i) {
    auto ss = next();
    long long a, b, c;
    if (!(ss >> a >> b >> c)) throw MeshParseError(lineno, "expected triangle 'i j k'");
    expect_end(ss);
    constexpr long long kMax = std::numeric_limits<std::int32_t>::max();
    if (a < 0 || b < 0 || c < 0 || a > kMax || b > kMax || c > kMax)
      throw MeshError("triangle " + std::to_string(i) + " has vertex index out of range");
    mesh.triangles.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                              static_cast<std::int32_t>(c)});
  }
  validate_mesh(mesh);
  return mesh;
}

inline void save_mesh(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_mesh(mesh, os);
}

inline TriangleMesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open mesh file '" + path + "'");
  return read_mesh(is);
}

}  // namespace memnet
